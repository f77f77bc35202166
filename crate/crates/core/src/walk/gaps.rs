use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Law of a single gap: bounded support, bounded density, closed-form
/// characteristic function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GapSpec", into = "GapSpec")]
pub enum GapDistribution {
    Uniform { a: f64, b: f64 },
    /// Lower bound `a`, mode `c`, upper bound `b`.
    Triangular { a: f64, c: f64, b: f64 },
    /// Density `(1 - cos(2π(y-a)/(b-a))) / (b-a)` on `[a, b]`.
    RaisedCosine { a: f64, b: f64 },
}

/// JSON wire form, e.g. `{"kind":"uniform","a":0.0,"b":1.0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GapSpec {
    Uniform { a: f64, b: f64 },
    Triangular { a: f64, c: f64, b: f64 },
    RaisedCosine { a: f64, b: f64 },
}

fn check_interval(a: f64, b: f64) -> Result<()> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(LabError::invalid("gap bounds must be finite"));
    }
    if a < 0.0 {
        return Err(LabError::invalid(format!("gaps must be positive: lower bound {a} < 0")));
    }
    if b <= a {
        return Err(LabError::invalid(format!("empty gap support: b = {b} <= a = {a}")));
    }
    Ok(())
}

impl TryFrom<GapSpec> for GapDistribution {
    type Error = LabError;

    fn try_from(spec: GapSpec) -> Result<Self> {
        match spec {
            GapSpec::Uniform { a, b } => Self::uniform(a, b),
            GapSpec::Triangular { a, c, b } => Self::triangular(a, c, b),
            GapSpec::RaisedCosine { a, b } => Self::raised_cosine(a, b),
        }
    }
}

impl From<GapDistribution> for GapSpec {
    fn from(d: GapDistribution) -> Self {
        match d {
            GapDistribution::Uniform { a, b } => GapSpec::Uniform { a, b },
            GapDistribution::Triangular { a, c, b } => GapSpec::Triangular { a, c, b },
            GapDistribution::RaisedCosine { a, b } => GapSpec::RaisedCosine { a, b },
        }
    }
}

// ∫₀¹ e^{isv} dv
fn e1(s: f64) -> Complex64 {
    if s.abs() < 0.5 {
        // Σ (is)^n / (n+1)!
        let is = Complex64::new(0.0, s);
        let mut term = Complex64::new(1.0, 0.0);
        let mut acc = term;
        for n in 1..28 {
            term = term * is / (n as f64 + 1.0);
            acc += term;
        }
        acc
    } else {
        (Complex64::new(0.0, s).exp() - 1.0) / Complex64::new(0.0, s)
    }
}

// ∫₀¹ v e^{isv} dv
fn e2(s: f64) -> Complex64 {
    if s.abs() < 0.5 {
        // Σ (is)^n / (n! (n+2))
        let is = Complex64::new(0.0, s);
        let mut pow_over_fact = Complex64::new(1.0, 0.0);
        let mut acc = pow_over_fact / 2.0;
        for n in 1..28 {
            pow_over_fact = pow_over_fact * is / n as f64;
            acc += pow_over_fact / (n as f64 + 2.0);
        }
        acc
    } else {
        let eis = Complex64::new(0.0, s).exp();
        eis / Complex64::new(0.0, s) + (eis - 1.0) / (s * s)
    }
}

impl GapDistribution {
    pub fn uniform(a: f64, b: f64) -> Result<Self> {
        check_interval(a, b)?;
        Ok(GapDistribution::Uniform { a, b })
    }

    pub fn triangular(a: f64, c: f64, b: f64) -> Result<Self> {
        check_interval(a, b)?;
        if !(a..=b).contains(&c) {
            return Err(LabError::invalid(format!("triangular mode {c} outside [{a}, {b}]")));
        }
        Ok(GapDistribution::Triangular { a, c, b })
    }

    pub fn raised_cosine(a: f64, b: f64) -> Result<Self> {
        check_interval(a, b)?;
        Ok(GapDistribution::RaisedCosine { a, b })
    }

    pub fn lower(&self) -> f64 {
        match *self {
            GapDistribution::Uniform { a, .. }
            | GapDistribution::Triangular { a, .. }
            | GapDistribution::RaisedCosine { a, .. } => a,
        }
    }

    /// Essential supremum of a gap.
    pub fn support_bound(&self) -> f64 {
        match *self {
            GapDistribution::Uniform { b, .. }
            | GapDistribution::Triangular { b, .. }
            | GapDistribution::RaisedCosine { b, .. } => b,
        }
    }

    fn width(&self) -> f64 {
        self.support_bound() - self.lower()
    }

    /// Supremum of the density.
    pub fn density_bound(&self) -> f64 {
        match self {
            GapDistribution::Uniform { .. } => 1.0 / self.width(),
            GapDistribution::Triangular { .. } | GapDistribution::RaisedCosine { .. } => {
                2.0 / self.width()
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            GapDistribution::Uniform { a, b } | GapDistribution::RaisedCosine { a, b } => 0.5 * (a + b),
            GapDistribution::Triangular { a, c, b } => (a + b + c) / 3.0,
        }
    }

    pub fn variance(&self) -> f64 {
        let w = self.width();
        match *self {
            GapDistribution::Uniform { .. } => w * w / 12.0,
            GapDistribution::Triangular { a, c, b } => {
                (a * a + b * b + c * c - a * b - a * c - b * c) / 18.0
            }
            // w² (1/12 - 1/(2π²))
            GapDistribution::RaisedCosine { .. } => {
                w * w * (1.0 / 12.0 - 1.0 / (2.0 * std::f64::consts::PI.powi(2)))
            }
        }
    }

    /// Distribution function of one gap.
    pub fn cdf(&self, y: f64) -> f64 {
        let a = self.lower();
        let b = self.support_bound();
        if y <= a {
            return 0.0;
        }
        if y >= b {
            return 1.0;
        }
        let w = b - a;
        match *self {
            GapDistribution::Uniform { .. } => (y - a) / w,
            GapDistribution::Triangular { c, .. } => {
                if y <= c {
                    (y - a) * (y - a) / (w * (c - a))
                } else {
                    1.0 - (b - y) * (b - y) / (w * (b - c))
                }
            }
            GapDistribution::RaisedCosine { .. } => {
                let s = (y - a) / w;
                s - (TAU * s).sin() / TAU
            }
        }
    }

    /// One draw, always in `(a, b]`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // 1 - U lies in (0, 1]
        let u = 1.0 - rng.random::<f64>();
        match *self {
            GapDistribution::Uniform { a, b } => a + (b - a) * u,
            GapDistribution::Triangular { a, c, b } => {
                let w = b - a;
                let fc = (c - a) / w;
                if u < fc {
                    a + (u * w * (c - a)).sqrt()
                } else {
                    b - ((1.0 - u) * w * (b - c)).sqrt()
                }
            }
            GapDistribution::RaisedCosine { a, b } => {
                // rejection from the uniform envelope, acceptance rate 1/2
                let mut s = u;
                loop {
                    let accept = rng.random::<f64>();
                    if accept < 0.5 * (1.0 - (TAU * s).cos()) {
                        break a + (b - a) * s;
                    }
                    s = 1.0 - rng.random::<f64>();
                }
            }
        }
    }

    /// `E exp(i t X)`.
    pub fn char_fn(&self, t: f64) -> Complex64 {
        let a = self.lower();
        let w = self.width();
        let shift = Complex64::new(0.0, t * a).exp();
        let s = w * t;
        let standard = match *self {
            GapDistribution::Uniform { .. } => e1(s),
            GapDistribution::Triangular { c, .. } => {
                let m = (c - a) / w;
                let left = 2.0 * m * e2(s * m);
                let right = 2.0 * (1.0 - m) * Complex64::new(0.0, s).exp() * e2(-s * (1.0 - m));
                left + right
            }
            GapDistribution::RaisedCosine { .. } => e1(s) - 0.5 * (e1(s + TAU) + e1(s - TAU)),
        };
        shift * standard
    }
}
