use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{require_nonzero_x, LabError, Result};
use crate::limits::stats::median;
use crate::periodic::ShapeFunction;
use crate::seeding::{derive_seed, replicate, rng_from_seed, task};
use crate::variance::reference_ax;
use crate::walk::{GapDistribution, PhaseWalk};

pub const DEFAULT_GAMMA: f64 = 1.2;

/// Checkpoints before this are skipped by the normalized statistics
/// (`log log N` must be positive).
const MIN_NORMALIZED_N: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Checkpoint {
    pub n: u64,
    pub partial_sum: f64,
    /// `max_{M ≤ n} |Σ_{k≤M} f(t_k)|`
    pub running_max_abs: f64,
}

/// Partial-sum process recorded on a geometric grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryCheckpoints {
    pub seed: u64,
    pub x: f64,
    pub checkpoints: Vec<Checkpoint>,
}

/// Distinct values of `⌊γ^i⌋` up to `n_max`, always ending at `n_max`.
pub fn checkpoint_grid(n_max: u64, gamma: f64) -> Vec<u64> {
    let mut grid = Vec::new();
    let mut level = 1.0f64;
    loop {
        let n = level.floor() as u64;
        if n >= n_max {
            break;
        }
        if grid.last() != Some(&n) {
            grid.push(n);
        }
        level *= gamma;
    }
    grid.push(n_max);
    grid
}

fn check_trajectory_args(n_max: u64, gamma: f64) -> Result<()> {
    if n_max < 1000 {
        return Err(LabError::invalid(format!("Nmax must be >= 1000, got {n_max}")));
    }
    if !(gamma > 1.0 && gamma <= 2.0) {
        return Err(LabError::invalid(format!("checkpoint ratio must lie in (1, 2], got {gamma}")));
    }
    Ok(())
}

fn record<I: Iterator<Item = f64>>(increments: I, grid: &[u64]) -> Vec<Checkpoint> {
    let mut out = Vec::with_capacity(grid.len());
    let mut sum = 0.0;
    let mut max_abs = 0.0f64;
    let mut next = grid.iter().peekable();
    for (i, v) in increments.enumerate() {
        sum += v;
        max_abs = max_abs.max(sum.abs());
        let n = i as u64 + 1;
        if next.peek() == Some(&&n) {
            out.push(Checkpoint {
                n,
                partial_sum: sum,
                running_max_abs: max_abs,
            });
            next.next();
            if next.peek().is_none() {
                break;
            }
        }
    }
    out
}

/// Stream `Σ f(t_k)` up to `n_max` in one pass.
pub fn simulate_trajectory(
    f: &ShapeFunction,
    dist: &GapDistribution,
    x: f64,
    n_max: u64,
    gamma: f64,
    seed: u64,
) -> Result<TrajectoryCheckpoints> {
    require_nonzero_x(x)?;
    check_trajectory_args(n_max, gamma)?;
    let grid = checkpoint_grid(n_max, gamma);
    let walk = PhaseWalk::seeded(*dist, x, seed)?;
    let checkpoints = record(walk.map(|t| f.evaluate_reduced(t)), &grid);
    Ok(TrajectoryCheckpoints { seed, x, checkpoints })
}

/// Gaussian random walk with unit-variance steps on the same grid; the
/// matched-horizon Brownian comparison path.
pub fn brownian_trajectory(n_max: u64, gamma: f64, seed: u64) -> Result<TrajectoryCheckpoints> {
    check_trajectory_args(n_max, gamma)?;
    let grid = checkpoint_grid(n_max, gamma);
    let mut rng = rng_from_seed(seed);
    let steps = std::iter::repeat_with(move || StandardNormal.sample(&mut rng));
    Ok(TrajectoryCheckpoints {
        seed,
        x: 1.0,
        checkpoints: record(steps, &grid),
    })
}

/// A normalized statistic per checkpoint and its running extremum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NormalizedSeries {
    pub n: Vec<u64>,
    pub value: Vec<f64>,
    pub running: Vec<f64>,
}

impl NormalizedSeries {
    pub fn last_running(&self) -> Option<f64> {
        self.running.last().copied()
    }
}

fn log_log(n: u64) -> f64 {
    (n as f64).ln().ln()
}

/// `S_N / √(2 N log log N)` and its running maximum.
pub fn lil_statistic(traj: &TrajectoryCheckpoints) -> NormalizedSeries {
    lil_signed(traj, 1.0)
}

/// The same statistic for `-S_N`; swapping `f` for `-f` exchanges the two.
pub fn lil_statistic_lower(traj: &TrajectoryCheckpoints) -> NormalizedSeries {
    lil_signed(traj, -1.0)
}

fn lil_signed(traj: &TrajectoryCheckpoints, sign: f64) -> NormalizedSeries {
    let mut out = NormalizedSeries {
        n: Vec::new(),
        value: Vec::new(),
        running: Vec::new(),
    };
    let mut best = f64::NEG_INFINITY;
    for c in traj.checkpoints.iter().filter(|c| c.n >= MIN_NORMALIZED_N) {
        let v = sign * c.partial_sum / (2.0 * c.n as f64 * log_log(c.n)).sqrt();
        best = best.max(v);
        out.n.push(c.n);
        out.value.push(v);
        out.running.push(best);
    }
    out
}

/// `√(log log N / N) · max_{M≤N} |S_M|` and its running minimum.
pub fn chung_statistic(traj: &TrajectoryCheckpoints) -> NormalizedSeries {
    let mut out = NormalizedSeries {
        n: Vec::new(),
        value: Vec::new(),
        running: Vec::new(),
    };
    let mut best = f64::INFINITY;
    for c in traj.checkpoints.iter().filter(|c| c.n >= MIN_NORMALIZED_N) {
        let v = (log_log(c.n) / c.n as f64).sqrt() * c.running_max_abs;
        best = best.min(v);
        out.n.push(c.n);
        out.value.push(v);
        out.running.push(best);
    }
    out
}

/// LIL and Chung statistics over many seeds, next to the Brownian oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LilChungStudy {
    pub a_x: f64,
    pub n_max: u64,
    pub lil_finals: Vec<f64>,
    pub chung_finals: Vec<f64>,
    pub lil_median: f64,
    pub lil_lower_median: f64,
    pub chung_median: f64,
    pub oracle_paths: u64,
    pub oracle_lil_median: f64,
    pub oracle_chung_median: f64,
    #[serde(skip)]
    pub trajectories: Vec<TrajectoryCheckpoints>,
}

#[allow(clippy::too_many_arguments)]
pub fn lil_chung_study(
    f: &ShapeFunction,
    dist: &GapDistribution,
    x: f64,
    n_max: u64,
    gamma: f64,
    seeds: u64,
    oracle_paths: u64,
    master_seed: u64,
) -> Result<LilChungStudy> {
    if seeds == 0 || oracle_paths == 0 {
        return Err(LabError::invalid("need at least one trajectory and one oracle path"));
    }
    let a_x = reference_ax(f, dist, x)?;
    let trajectories = replicate(seeds, |i| {
        simulate_trajectory(f, dist, x, n_max, gamma, derive_seed(master_seed, task::TRAJECTORY, i))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let oracle = replicate(oracle_paths, |i| {
        brownian_trajectory(n_max, gamma, derive_seed(master_seed, task::BROWNIAN, i))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let finals = |paths: &[TrajectoryCheckpoints]| -> (Vec<f64>, Vec<f64>) {
        paths
            .iter()
            .map(|t| {
                (
                    lil_statistic(t).last_running().unwrap_or(0.0),
                    chung_statistic(t).last_running().unwrap_or(0.0),
                )
            })
            .unzip()
    };
    let (lil_finals, chung_finals) = finals(&trajectories);
    let lil_lower: Vec<f64> = trajectories
        .iter()
        .map(|t| lil_statistic_lower(t).last_running().unwrap_or(0.0))
        .collect();
    let (oracle_lil, oracle_chung) = finals(&oracle);
    Ok(LilChungStudy {
        a_x,
        n_max,
        lil_median: median(&lil_finals),
        lil_lower_median: median(&lil_lower),
        chung_median: median(&chung_finals),
        lil_finals,
        chung_finals,
        oracle_paths,
        oracle_lil_median: median(&oracle_lil),
        oracle_chung_median: median(&oracle_chung),
        trajectories,
    })
}
