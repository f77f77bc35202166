//! Finite-horizon checks of the distributional consequences of the strong
//! approximation: CLT scaling, LIL and Chung bands, the integral test, and
//! the fourth-moment bound.

mod clt;
mod kefp;
mod moment;
pub mod stats;
mod trajectory;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use clt::{clt_test, ks_self_check};
pub use kefp::{kefp_classify, KefpResult, KefpVerdict, KEFP_START};
pub use moment::{fourth_moment_ratio, MomentEstimate};
pub use trajectory::{
    brownian_trajectory, checkpoint_grid, chung_statistic, lil_chung_study, lil_statistic, lil_statistic_lower,
    simulate_trajectory, Checkpoint, LilChungStudy, NormalizedSeries, TrajectoryCheckpoints,
    DEFAULT_GAMMA,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Diagnostic,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_ok(self) -> bool {
        !matches!(self, Verdict::Fail)
    }
}

/// Outcome of one statistical check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band: Option<[f64; 2]>,
    pub sample_size: u64,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub details: BTreeMap<String, f64>,
}

impl TestReport {
    pub fn new(name: impl Into<String>, statistic: f64, sample_size: u64, verdict: Verdict) -> Self {
        Self {
            name: name.into(),
            statistic,
            p_value: None,
            band: None,
            sample_size,
            verdict,
            details: BTreeMap::new(),
        }
    }

    /// Pass iff `statistic` lies in `[lo, hi]`.
    pub fn banded(name: impl Into<String>, statistic: f64, band: [f64; 2], sample_size: u64) -> Self {
        let ok = statistic >= band[0] && statistic <= band[1];
        Self {
            band: Some(band),
            ..Self::new(name, statistic, sample_size, Verdict::from_bool(ok))
        }
    }

    pub fn with_p_value(mut self, p: f64) -> Self {
        self.p_value = Some(p.clamp(0.0, 1.0));
        self
    }

    pub fn with_detail(mut self, key: &str, value: f64) -> Self {
        self.details.insert(key.to_string(), value);
        self
    }
}
