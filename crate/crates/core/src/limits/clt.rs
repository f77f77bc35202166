use rand_distr::{Distribution, StandardNormal};

use super::stats::{chi_square_uniform, ks_standard_normal};
use super::{TestReport, Verdict};
use crate::error::{LabError, Result};
use crate::periodic::ShapeFunction;
use crate::seeding::{derive_seed, replicate, rng_from_seed, task, Moments};
use crate::variance::reference_ax;
use crate::walk::{GapDistribution, PhaseWalk};

pub const CLT_P_FLOOR: f64 = 1e-3;
pub const CLT_VARIANCE_TOLERANCE: f64 = 0.05;

/// KS test of `S_N / √(A_x N)` against N(0, 1) over `reps` walks, plus the
/// sample variance of `S_N / √N` relative to `A_x`.
pub fn clt_test(
    f: &ShapeFunction,
    dist: &GapDistribution,
    x: f64,
    n: u64,
    reps: u64,
    seed: u64,
) -> Result<TestReport> {
    if reps < 500 {
        return Err(LabError::invalid(format!("need at least 500 replications, got {reps}")));
    }
    if n == 0 {
        return Err(LabError::invalid("N must be positive"));
    }
    let a_x = reference_ax(f, dist, x)?;
    if a_x <= 0.0 {
        return Err(LabError::invalid(format!(
            "A_x = {a_x}: the limit law is degenerate, nothing to test"
        )));
    }
    let sums = replicate(reps, |r| {
        PhaseWalk::seeded(*dist, x, derive_seed(seed, task::CLT, r))
            .expect("x validated by reference_ax")
            .take(n as usize)
            .map(|t| f.evaluate_reduced(t))
            .sum::<f64>()
    });
    let scale = (n as f64).sqrt();
    let mut moments = Moments::default();
    for s in &sums {
        moments.push(s / scale);
    }
    let variance_ratio = moments.variance() / a_x;
    let norm = (a_x * n as f64).sqrt();
    let mut z: Vec<f64> = sums.iter().map(|s| s / norm).collect();
    let (d, p) = ks_standard_normal(&mut z);
    let ok = p > CLT_P_FLOOR && (variance_ratio - 1.0).abs() <= CLT_VARIANCE_TOLERANCE;
    Ok(TestReport::new("clt", d, reps, Verdict::from_bool(ok))
        .with_p_value(p)
        .with_detail("a_x", a_x)
        .with_detail("n", n as f64)
        .with_detail("variance_ratio", variance_ratio))
}

/// Validates the KS machinery: `batches` KS p-values from exact standard
/// normal samples of size `batch_size`, then a chi-square uniformity test on
/// those p-values.
pub fn ks_self_check(batch_size: usize, batches: u64, seed: u64) -> TestReport {
    let p_values = replicate(batches, |b| {
        let mut rng = rng_from_seed(derive_seed(seed, task::KS_SELFCHECK, b));
        let mut z: Vec<f64> = (0..batch_size).map(|_| StandardNormal.sample(&mut rng)).collect();
        ks_standard_normal(&mut z).1
    });
    let (stat, p) = chi_square_uniform(&p_values, 10);
    TestReport::new("ks-self-check", stat, batches, Verdict::from_bool(p > 1e-3)).with_p_value(p)
}
