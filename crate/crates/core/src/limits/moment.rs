use serde::Serialize;

use crate::error::{require_nonzero_x, LabError, Result};
use crate::periodic::ShapeFunction;
use crate::seeding::{chunked_reduce, derive_seed, task, Moments};
use crate::walk::{GapDistribution, PhaseWalk};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    /// `E (Σ a_k Y_k)^4 / (Σ a_k²)²`
    pub ratio: f64,
    pub std_err: f64,
    pub reps: u64,
}

/// Monte Carlo fourth moment of the weighted, centered sum. Centering uses
/// the per-index empirical mean over replications, so the walks are
/// generated twice from the same per-replication seeds.
pub fn fourth_moment_ratio(
    f: &ShapeFunction,
    dist: &GapDistribution,
    x: f64,
    weights: &[f64],
    reps: u64,
    seed: u64,
) -> Result<MomentEstimate> {
    require_nonzero_x(x)?;
    if reps < 10_000 {
        return Err(LabError::invalid(format!("need at least 10^4 replications, got {reps}")));
    }
    let norm_sq: f64 = weights.iter().map(|a| a * a).sum();
    if norm_sq == 0.0 {
        return Err(LabError::invalid("all weights are zero"));
    }
    let n = weights.len();
    let walk = |r: u64| {
        PhaseWalk::seeded(*dist, x, derive_seed(seed, task::MOMENT4, r))
            .expect("x checked above")
            .take(n)
            .map(|t| f.evaluate_reduced(t))
    };

    let sums = chunked_reduce(
        reps,
        || vec![0.0; n],
        |acc, r| acc.iter_mut().zip(walk(r)).for_each(|(a, v)| *a += v),
        |a, b| a.iter_mut().zip(b).for_each(|(a, b)| *a += b),
    );
    let means: Vec<f64> = sums.iter().map(|s| s / reps as f64).collect();

    let fourth = chunked_reduce(
        reps,
        Moments::default,
        |acc, r| {
            let w: f64 = walk(r)
                .zip(weights.iter().zip(&means))
                .map(|(v, (a, mu))| a * (v - mu))
                .sum();
            acc.push(w.powi(4));
        },
        |a, b| a.merge(b),
    );
    let denom = norm_sq * norm_sq;
    Ok(MomentEstimate {
        ratio: fourth.mean() / denom,
        std_err: fourth.std_err() / denom,
        reps,
    })
}
