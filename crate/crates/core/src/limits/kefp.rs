//! Integral test for upper-class functions, on the family
//! `φ_a(t) = √(2 log log t + a log log log t)`.
//!
//! With `u = log log t` the integrand `φ(t)/t · exp(-φ(t)²/2) dt` becomes
//! `√(2u + a log u) · u^{-a/2} du`, which behaves like `u^{-(a-1)/2}`; the
//! integral converges iff `(a-1)/2 > 1`, i.e. `a > 3`.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Lower integration limit; `log log log t > 0` from here on.
pub const KEFP_START: f64 = 16.0;

/// Panel width in the `u = log log t` coordinate.
const PANEL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KefpVerdict {
    Converges,
    Diverges,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KefpResult {
    pub a: f64,
    pub t_max: f64,
    /// ∫_{16}^{t_max} φ(t)/t · exp(-φ(t)²/2) dt
    pub partial_integral: f64,
    /// `(a - 1) / 2`, the power of `log log t` in the asymptotic integrand.
    pub exponent: f64,
    pub verdict: KefpVerdict,
}

fn integrand(u: f64, a: f64) -> f64 {
    let phi_sq = (2.0 * u + a * u.ln()).max(0.0);
    phi_sq.sqrt() * u.powf(-0.5 * a)
}

fn simpson(lo: f64, hi: f64, a: f64) -> f64 {
    let mid = 0.5 * (lo + hi);
    (hi - lo) / 6.0 * (integrand(lo, a) + 4.0 * integrand(mid, a) + integrand(hi, a))
}

pub fn kefp_classify(a: f64, t_max: f64) -> Result<KefpResult> {
    if !a.is_finite() {
        return Err(LabError::invalid("a must be finite"));
    }
    if t_max.is_nan() || t_max < KEFP_START {
        return Err(LabError::invalid(format!(
            "t_max = {t_max} is below the integration start {KEFP_START}"
        )));
    }
    let u0 = KEFP_START.ln().ln();
    let u1 = t_max.ln().ln();
    // fixed panels anchored at u0, so extending t_max only appends pieces
    let mut total = 0.0;
    let mut lo = u0;
    while lo < u1 {
        let hi = (lo + PANEL).min(u1);
        total += simpson(lo, hi, a);
        lo += PANEL;
    }
    let exponent = 0.5 * (a - 1.0);
    Ok(KefpResult {
        a,
        t_max,
        partial_integral: total,
        exponent,
        verdict: if exponent > 1.0 {
            KefpVerdict::Converges
        } else {
            KefpVerdict::Diverges
        },
    })
}
