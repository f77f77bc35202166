//! Positive i.i.d. gaps, random-walk phases `S_k x mod 1`, and the density
//! of those phases.

mod density;
mod gaps;

pub use density::{decay_fit, mod1_density, uniformity_gap, DecayFit, Mod1Density, Mod1Spectrum};
pub use gaps::{GapDistribution, GapSpec};

use rand::Rng;

use crate::error::{require_nonzero_x, LabError, Result};
use crate::periodic::reduce_mod1;
use crate::seeding::{rng_from_seed, LabRng};

/// Draw `n` gaps from `dist` with a generator seeded by `seed`.
pub fn sample_gaps(dist: &GapDistribution, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(LabError::invalid("gap count must be at least 1"));
    }
    let mut rng = rng_from_seed(seed);
    Ok((0..n).map(|_| dist.sample(&mut rng)).collect())
}

/// Accumulates phase increments modulo one with Kahan compensation.
#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseAccumulator {
    phase: f64,
    carry: f64,
}

impl PhaseAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    /// Add `increment` (any real) and return the new phase in `[0, 1)`.
    #[inline]
    pub fn advance(&mut self, increment: f64) -> f64 {
        let y = reduce_mod1(increment) - self.carry;
        let t = self.phase + y;
        self.carry = (t - self.phase) - y;
        // t lies in (-eps, 2); subtracting 1 from [1, 2) is exact
        let mut p = if t >= 1.0 { t - 1.0 } else { t };
        if p < 0.0 {
            p += 1.0;
        }
        if p >= 1.0 {
            p = 0.0;
        }
        self.phase = p;
        p
    }
}

/// Streaming iterator over `t_k = S_k x mod 1`, k = 1, 2, ...
pub struct PhaseWalk<R> {
    dist: GapDistribution,
    x: f64,
    rng: R,
    acc: PhaseAccumulator,
}

impl PhaseWalk<LabRng> {
    pub fn seeded(dist: GapDistribution, x: f64, seed: u64) -> Result<Self> {
        Self::with_rng(dist, x, rng_from_seed(seed))
    }
}

impl<R: Rng> PhaseWalk<R> {
    pub fn with_rng(dist: GapDistribution, x: f64, rng: R) -> Result<Self> {
        require_nonzero_x(x)?;
        Ok(Self {
            dist,
            x,
            rng,
            acc: PhaseAccumulator::new(),
        })
    }
}

impl<R: Rng> Iterator for PhaseWalk<R> {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        let gap = self.dist.sample(&mut self.rng);
        Some(self.acc.advance(self.x * gap))
    }
}

/// One realized phase sequence, reproducible from `(seed, x, len)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkPhasePath {
    pub seed: u64,
    pub x: f64,
    pub phases: Vec<f64>,
}

impl WalkPhasePath {
    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }
}

/// Phases of a walk with the given explicit gaps, starting from `t_0 = 0`.
pub fn phases_from_gaps<I>(x: f64, gaps: I) -> Result<Vec<f64>>
where
    I: IntoIterator<Item = f64>,
{
    require_nonzero_x(x)?;
    let mut acc = PhaseAccumulator::new();
    Ok(gaps.into_iter().map(|g| acc.advance(x * g)).collect())
}

pub fn walk_phases(dist: &GapDistribution, x: f64, n: usize, seed: u64) -> Result<WalkPhasePath> {
    let phases = PhaseWalk::seeded(*dist, x, seed)?.take(n).collect();
    Ok(WalkPhasePath { seed, x, phases })
}
