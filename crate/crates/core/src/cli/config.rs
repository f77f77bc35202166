use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};
use crate::limits::DEFAULT_GAMMA;
use crate::periodic::{ShapeFunction, ShapeSpec};
use crate::variance::{DEFAULT_GRID, DEFAULT_TRUNCATION};
use crate::walk::{GapDistribution, GapSpec};

/// One experiment, as read from the `--config` JSON document.
///
/// Only `function`, `gaps` and `x` are required; everything else falls back
/// to the defaults below. Optional per-command sizes (`reps`, `n`) are
/// resolved by each command when absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub function: ShapeSpec,
    pub gaps: GapSpec,
    pub x: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub reps: Option<u64>,
    #[serde(default)]
    pub n: Option<u64>,
    #[serde(default = "default_truncation")]
    pub k: u32,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_decay_steps")]
    pub decay_steps: u32,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_n_max")]
    pub n_max: u64,
    #[serde(default = "default_trajectories")]
    pub trajectories: u64,
    #[serde(default = "default_trajectories")]
    pub oracle_paths: u64,
    /// Explicit weights for `moment4`; when absent, equal weights at each
    /// of `moment_sizes`.
    #[serde(default)]
    pub weights: Option<Vec<f64>>,
    #[serde(default = "default_moment_sizes")]
    pub moment_sizes: Vec<u64>,
    #[serde(default = "default_kefp_a")]
    pub a: Vec<f64>,
    #[serde(default = "default_t_max")]
    pub t_max: Vec<f64>,
}

fn default_truncation() -> u32 {
    DEFAULT_TRUNCATION
}
fn default_grid() -> usize {
    DEFAULT_GRID
}
fn default_decay_steps() -> u32 {
    30
}
fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}
fn default_n_max() -> u64 {
    1_000_000
}
fn default_trajectories() -> u64 {
    64
}
fn default_moment_sizes() -> Vec<u64> {
    vec![64, 256, 1024]
}
fn default_kefp_a() -> Vec<f64> {
    vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 10.0]
}
fn default_t_max() -> Vec<f64> {
    vec![1e6, 1e12, 1e24, 1e48, 1e96, 1e192]
}

/// A config that passed validation, with the function and gap law built.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub function: ShapeFunction,
    pub gaps: GapDistribution,
}

fn positive(name: &str, v: u64) -> Result<()> {
    if v == 0 {
        return Err(LabError::invalid(format!("{name} must be positive")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Experiment> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| LabError::invalid(format!("malformed config: {e}")))?;
        config.validate()
    }

    pub fn validate(self) -> Result<Experiment> {
        if self.x == 0.0 || !self.x.is_finite() {
            return Err(LabError::invalid(format!("x must be finite and nonzero, got {}", self.x)));
        }
        if let Some(r) = self.reps {
            positive("reps", r)?;
        }
        if let Some(n) = self.n {
            positive("n", n)?;
        }
        positive("k", self.k as u64)?;
        positive("decay_steps", self.decay_steps as u64)?;
        positive("n_max", self.n_max)?;
        positive("trajectories", self.trajectories)?;
        positive("oracle_paths", self.oracle_paths)?;
        if !self.grid.is_power_of_two() {
            return Err(LabError::invalid(format!("grid must be a power of two, got {}", self.grid)));
        }
        if !(self.gamma > 1.0 && self.gamma <= 2.0) {
            return Err(LabError::invalid(format!("gamma must lie in (1, 2], got {}", self.gamma)));
        }
        if self.moment_sizes.is_empty() || self.moment_sizes.contains(&0) {
            return Err(LabError::invalid("moment_sizes must be a non-empty list of positive sizes"));
        }
        if matches!(&self.weights, Some(w) if w.is_empty()) {
            return Err(LabError::invalid("weights must be non-empty"));
        }
        let function = ShapeFunction::try_from(self.function.clone())?;
        let gaps = GapDistribution::try_from(self.gaps)?;
        Ok(Experiment {
            config: self,
            function,
            gaps,
        })
    }

    /// SHA-256 of the canonical JSON rendering, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config is serializable");
        hex::encode(Sha256::digest(&canonical))
    }
}
