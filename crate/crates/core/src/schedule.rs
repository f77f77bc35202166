//! Long/short block bookkeeping.
//!
//! Block `k` occupies indices `m_{k-1}+1 ..= m_k`: a long stretch of
//! `⌊√k⌋` indices followed by a short one of `⌊k^{1/4}⌋`, where
//! `m̃_k = Σ_{j≤k} ⌊√j⌋`, `m̂_k = Σ_{j≤k} ⌊j^{1/4}⌋` and `m_k = m̃_k + m̂_k`.
//! All schedule arithmetic is integer-only.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::periodic::ShapeFunction;
use crate::seeding::{chunked_reduce, derive_seed, task, Moments};
use crate::variance::reference_ax;
use crate::walk::{GapDistribution, PhaseWalk, WalkPhasePath};

/// `⌊√k⌋` by integer Newton iteration.
pub fn isqrt(k: u64) -> u64 {
    if k < 2 {
        return k;
    }
    // start above the root so the iteration decreases monotonically
    let mut r = 1u64 << ((64 - k.leading_zeros()).div_ceil(2));
    loop {
        let next = (r + k / r) / 2;
        if next >= r {
            return r;
        }
        r = next;
    }
}

/// `⌊k^{1/4}⌋`, using `⌊√⌊√k⌋⌋ = ⌊k^{1/4}⌋`.
pub fn iroot4(k: u64) -> u64 {
    isqrt(isqrt(k))
}

pub fn m_tilde(k: u64) -> u64 {
    if k == 0 {
        return 0;
    }
    // each s < r contributes s over the (2s+1) indices with ⌊√j⌋ = s
    let r = isqrt(k) as u128;
    let k = k as u128;
    let full = (r - 1) * r * (2 * r - 1) / 3 + (r - 1) * r / 2;
    (full + r * (k - r * r + 1)) as u64
}

pub fn m_hat(k: u64) -> u64 {
    if k == 0 {
        return 0;
    }
    let q = iroot4(k) as u128;
    let k = k as u128;
    let full: u128 = (1..q).map(|s| s * ((s + 1).pow(4) - s.pow(4))).sum();
    (full + q * (k - q.pow(4) + 1)) as u64
}

pub fn m(k: u64) -> u64 {
    m_tilde(k) + m_hat(k)
}

/// The unique `p` with `m_p ≤ n < m_{p+1}`; 0 when `n < m_1 = 2`.
pub fn p_of_n(n: u64) -> u64 {
    // m(k) >= 2k, so the answer is at most n/2
    let (mut lo, mut hi) = (0u64, n / 2 + 1);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if m(mid) <= n {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// 1-based inclusive index ranges of block `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BlockRange {
    pub k: u64,
    pub long_start: u64,
    pub long_end: u64,
    pub short_start: u64,
    pub short_end: u64,
}

impl BlockRange {
    pub fn of(k: u64) -> Self {
        assert!(k >= 1, "blocks are numbered from 1");
        let start = m(k - 1) + 1;
        let long_end = start + isqrt(k) - 1;
        Self {
            k,
            long_start: start,
            long_end,
            short_start: long_end + 1,
            short_end: m(k),
        }
    }
}

/// The schedule for blocks `1..=n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockSchedule {
    pub n: u64,
    pub m_tilde: Vec<u64>,
    pub m_hat: Vec<u64>,
    pub m: Vec<u64>,
    pub blocks: Vec<BlockRange>,
}

impl BlockSchedule {
    pub fn new(n: u64) -> Self {
        let mut m_tilde = Vec::with_capacity(n as usize);
        let mut m_hat = Vec::with_capacity(n as usize);
        let mut blocks = Vec::with_capacity(n as usize);
        let (mut mt, mut mh) = (0u64, 0u64);
        for k in 1..=n {
            let long = isqrt(k);
            let short = iroot4(k);
            let start = mt + mh + 1;
            blocks.push(BlockRange {
                k,
                long_start: start,
                long_end: start + long - 1,
                short_start: start + long,
                short_end: start + long + short - 1,
            });
            mt += long;
            mh += short;
            m_tilde.push(mt);
            m_hat.push(mh);
        }
        let m = m_tilde.iter().zip(&m_hat).map(|(a, b)| a + b).collect();
        Self {
            n,
            m_tilde,
            m_hat,
            m,
            blocks,
        }
    }
}

/// Per-block sums of `f(t_j)` plus the tail past the last complete block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockSums {
    pub n: u64,
    pub p: u64,
    pub long: Vec<f64>,
    pub short: Vec<f64>,
    pub remainder: f64,
}

impl BlockSums {
    /// Block sums and remainder added in index order.
    pub fn total(&self) -> f64 {
        let mut acc = 0.0;
        for (l, s) in self.long.iter().zip(&self.short) {
            acc += l;
            acc += s;
        }
        acc + self.remainder
    }
}

/// Block sums over precomputed values `v_j = f(t_j)` (0-based slice, 1-based indices).
pub fn block_sums_of_values(values: &[f64], n: u64) -> Result<BlockSums> {
    if (values.len() as u64) < n {
        return Err(LabError::invalid(format!(
            "path has {} phases, block sums up to n = {n} need at least n",
            values.len()
        )));
    }
    let p = p_of_n(n);
    let range_sum = |a: u64, b: u64| -> f64 { values[(a - 1) as usize..b as usize].iter().sum() };
    let mut long = Vec::with_capacity(p as usize);
    let mut short = Vec::with_capacity(p as usize);
    for block in BlockSchedule::new(p).blocks {
        long.push(range_sum(block.long_start, block.long_end));
        short.push(range_sum(block.short_start, block.short_end));
    }
    let tail_start = m(p) + 1;
    let remainder = if tail_start <= n { range_sum(tail_start, n) } else { 0.0 };
    Ok(BlockSums {
        n,
        p,
        long,
        short,
        remainder,
    })
}

pub fn block_sums(path: &WalkPhasePath, f: &ShapeFunction, n: u64) -> Result<BlockSums> {
    let end = (n as usize).min(path.phases.len());
    let values: Vec<f64> = path.phases[..end].iter().map(|t| f.evaluate_reduced(*t)).collect();
    if (path.phases.len() as u64) < n {
        return Err(LabError::invalid(format!(
            "path has {} phases, need {n}",
            path.phases.len()
        )));
    }
    block_sums_of_values(&values, n)
}

/// Empirical `Σ Var(T_k) / (A_x m̃_n)` and `Σ Var(T*_k) / (A_x m̂_n)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockVarianceRatio {
    pub n: u64,
    pub reps: u64,
    pub a_x: f64,
    pub sum_var_long: f64,
    pub sum_var_short: f64,
    pub m_tilde: u64,
    pub m_hat: u64,
    pub ratio_long: f64,
    pub ratio_short: f64,
}

pub fn block_variance_ratio(
    f: &ShapeFunction,
    dist: &GapDistribution,
    x: f64,
    n: u64,
    reps: u64,
    seed: u64,
) -> Result<BlockVarianceRatio> {
    if reps < 100 {
        return Err(LabError::invalid(format!("need at least 100 replications, got {reps}")));
    }
    if n == 0 {
        return Err(LabError::invalid("need at least one block"));
    }
    let a_x = reference_ax(f, dist, x)?;
    if a_x <= 0.0 {
        return Err(LabError::invalid(format!("A_x = {a_x} is not positive; ratio undefined")));
    }
    let schedule = BlockSchedule::new(n);
    let blocks = n as usize;
    let init = || (vec![Moments::default(); blocks], vec![Moments::default(); blocks]);
    let (long, short) = chunked_reduce(
        reps,
        init,
        |(long, short), r| {
            let mut walk = PhaseWalk::seeded(*dist, x, derive_seed(seed, task::BLOCK_VARIANCE, r))
                .expect("x validated by reference_ax");
            for (i, block) in schedule.blocks.iter().enumerate() {
                let len_long = block.long_end - block.long_start + 1;
                let len_short = block.short_end - block.short_start + 1;
                let t: f64 = walk.by_ref().take(len_long as usize).map(|t| f.evaluate_reduced(t)).sum();
                let s: f64 = walk.by_ref().take(len_short as usize).map(|t| f.evaluate_reduced(t)).sum();
                long[i].push(t);
                short[i].push(s);
            }
        },
        |(la, sa), (lb, sb)| {
            la.iter_mut().zip(lb).for_each(|(a, b)| a.merge(b));
            sa.iter_mut().zip(sb).for_each(|(a, b)| a.merge(b));
        },
    );
    let sum_var_long: f64 = long.iter().map(Moments::variance).sum();
    let sum_var_short: f64 = short.iter().map(Moments::variance).sum();
    let m_tilde = schedule.m_tilde[blocks - 1];
    let m_hat = schedule.m_hat[blocks - 1];
    Ok(BlockVarianceRatio {
        n,
        reps,
        a_x,
        sum_var_long,
        sum_var_short,
        m_tilde,
        m_hat,
        ratio_long: sum_var_long / (a_x * m_tilde as f64),
        ratio_short: sum_var_short / (a_x * m_hat as f64),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScheduleAsymptotics {
    pub n: u64,
    /// `m̃_n / ((2/3) n^{3/2})`
    pub tilde_ratio: f64,
    /// `m̂_n / ((4/5) n^{5/4})`
    pub hat_ratio: f64,
    /// `(n - m_{p(n)}) / n^{1/3}`
    pub remainder_ratio: f64,
}

pub fn schedule_asymptotics(n: u64) -> Result<ScheduleAsymptotics> {
    if n < 10 {
        return Err(LabError::invalid(format!("asymptotic diagnostics need n >= 10, got {n}")));
    }
    let nf = n as f64;
    Ok(ScheduleAsymptotics {
        n,
        tilde_ratio: m_tilde(n) as f64 / (2.0 / 3.0 * nf.powf(1.5)),
        hat_ratio: m_hat(n) as f64 / (0.8 * nf.powf(1.25)),
        remainder_ratio: (n - m(p_of_n(n))) as f64 / nf.cbrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_root(k: u64, p: u32) -> u64 {
        let mut r = 0u64;
        while (r + 1).pow(p) <= k {
            r += 1;
        }
        r
    }

    #[test]
    fn integer_roots_at_perfect_powers() {
        for k in 0..5000u64 {
            assert_eq!(isqrt(k), brute_root(k, 2), "k={k}");
            assert_eq!(iroot4(k), brute_root(k, 4), "k={k}");
        }
        for r in [1u64 << 20, 3_037_000_499, u32::MAX as u64] {
            assert_eq!(isqrt(r * r), r);
            assert_eq!(isqrt(r * r - 1), r - 1);
        }
        assert_eq!(isqrt(u64::MAX), u32::MAX as u64);
    }

    #[test]
    fn schedule_examples() {
        assert_eq!((m_tilde(3), m_hat(3), m(3)), (3, 3, 6));
        assert_eq!((m_tilde(4), m_hat(4), m(4)), (5, 4, 9));
        assert_eq!(m(0), 0);
        assert_eq!(p_of_n(5), 2);
        assert_eq!(p_of_n(6), 3);
        assert_eq!(p_of_n(1), 0);
        assert_eq!(p_of_n(0), 0);
        let p = p_of_n(1_000_000);
        assert!(m(p) <= 1_000_000 && 1_000_000 < m(p + 1));
    }

    #[test]
    fn closed_form_sums_match_direct_summation() {
        let (mut t, mut h) = (0u64, 0u64);
        for k in 1..=20_000u64 {
            t += brute_root(k, 2);
            h += brute_root(k, 4);
            assert_eq!(m_tilde(k), t);
            assert_eq!(m_hat(k), h);
        }
    }

    #[test]
    fn schedule_struct_matches_functions() {
        let s = BlockSchedule::new(300);
        for (i, b) in s.blocks.iter().enumerate() {
            let k = i as u64 + 1;
            assert_eq!(*b, BlockRange::of(k));
            assert_eq!(s.m[i], m(k));
        }
    }

    #[test]
    fn six_index_tiling() {
        // k=1: {1},{2}; k=2: {3},{4}; k=3: {5},{6}
        let values = [1.0, 10.0, 100.0, 1000.0, 1e4, 1e5];
        let b = block_sums_of_values(&values, 6).unwrap();
        assert_eq!(b.p, 3);
        assert_eq!(b.long, vec![1.0, 100.0, 1e4]);
        assert_eq!(b.short, vec![10.0, 1000.0, 1e5]);
        assert_eq!(b.remainder, 0.0);
        let b = block_sums_of_values(&values, 5).unwrap();
        assert_eq!((b.p, b.remainder), (2, 1e4));
    }

    #[test]
    fn zero_function_block_sums() {
        let d = GapDistribution::uniform(0.0, 1.0).unwrap();
        let path = crate::walk::walk_phases(&d, 0.5, 500, 3).unwrap();
        let b = block_sums(&path, &ShapeFunction::zero(), 500).unwrap();
        assert!(b.long.iter().chain(&b.short).all(|v| *v == 0.0));
        assert!(block_sums(&path, &ShapeFunction::zero(), 501).is_err());
    }

    #[test]
    fn block_sums_equal_direct_partial_sum() {
        let d = GapDistribution::uniform(0.0, 1.0).unwrap();
        let f = ShapeFunction::cos1();
        let path = crate::walk::walk_phases(&d, 1.0, 10_000, 17).unwrap();
        let b = block_sums(&path, &f, 10_000).unwrap();
        let direct: f64 = path.phases.iter().map(|t| f.evaluate(*t)).sum();
        assert!((b.total() - direct).abs() < 1e-9);
    }

    #[test]
    fn asymptotics_at_one_million() {
        let a = schedule_asymptotics(1_000_000).unwrap();
        assert!((0.999..=1.001).contains(&a.tilde_ratio), "{a:?}");
        assert!(a.remainder_ratio <= 3.0);
        // m̂_n = (4/5) n^{5/4} - n/2 + O(n^{1/4}): the relative lag at 10^6 is about 2%
        assert!((a.hat_ratio - (1.0 - 0.625 * 1e6f64.powf(-0.25))).abs() < 1e-3, "{a:?}");
        assert!(schedule_asymptotics(9).is_err());
    }

    #[test]
    fn variance_ratio_errors() {
        let d = GapDistribution::uniform(0.0, 1.0).unwrap();
        assert!(matches!(
            block_variance_ratio(&ShapeFunction::zero(), &d, 0.5, 50, 100, 1),
            Err(LabError::InvalidInput(_))
        ));
        assert!(block_variance_ratio(&ShapeFunction::cos1(), &d, 0.5, 50, 99, 1).is_err());
    }

    #[test]
    fn variance_ratio_with_independent_phases() {
        // x = 1 with uniform(0,1) gaps: phases are i.i.d. uniform, so Var(T_k) = ⌊√k⌋/2 exactly
        let d = GapDistribution::uniform(0.0, 1.0).unwrap();
        let r = block_variance_ratio(&ShapeFunction::cos1(), &d, 1.0, 60, 4000, 9).unwrap();
        assert!((r.ratio_long - 1.0).abs() < 0.05, "{r:?}");
        assert!((r.ratio_short - 1.0).abs() < 0.05, "{r:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn exact_tiling(n in 1u64..100_000) {
            let p = p_of_n(n);
            prop_assert!(m(p) <= n && n < m(p + 1));
            let mut next = 1u64;
            for b in BlockSchedule::new(p).blocks {
                prop_assert_eq!(b.long_start, next);
                prop_assert!(b.long_end >= b.long_start);
                prop_assert_eq!(b.short_start, b.long_end + 1);
                prop_assert!(b.short_end >= b.short_start);
                next = b.short_end + 1;
            }
            prop_assert_eq!(next, m(p) + 1);
            prop_assert!(next <= n + 1);
        }

        #[test]
        fn dyadic_values_sum_exactly(values in prop::collection::vec(-64i32..64, 1..400)) {
            let v: Vec<f64> = values.iter().map(|x| *x as f64 / 8.0).collect();
            let n = v.len() as u64;
            let b = block_sums_of_values(&v, n).unwrap();
            prop_assert_eq!(b.total(), v.iter().sum::<f64>());
        }
    }
}
