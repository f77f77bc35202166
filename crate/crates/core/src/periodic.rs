//! Mean-zero, period-one shape functions and their circular autocorrelation.
//!
//! Two families are representable: finite trigonometric polynomials (exact
//! closed forms everywhere) and piecewise-linear interpolants of equally
//! spaced samples (exact piecewise-quadratic integration, no quadrature knob).

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Floor-based reduction of `t` into `[0, 1)`.
#[inline]
pub fn reduce_mod1(t: f64) -> f64 {
    let r = t - t.floor();
    // t - floor(t) can round up to 1.0 for tiny negative t
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// `f(t) = Σ_j a_j cos(2πjt) + b_j sin(2πjt)`, j = 1..=J. No constant term.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolynomial {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl TrigPolynomial {
    /// Missing trailing coefficients in the shorter list are taken as zero.
    pub fn new(cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        if cos.iter().chain(sin.iter()).any(|c| !c.is_finite()) {
            return Err(LabError::invalid("trig coefficients must be finite"));
        }
        let degree = cos.len().max(sin.len());
        let mut cos = cos;
        let mut sin = sin;
        cos.resize(degree, 0.0);
        sin.resize(degree, 0.0);
        Ok(Self { cos, sin })
    }

    pub fn cosine(harmonic: usize, amplitude: f64) -> Self {
        assert!(harmonic >= 1, "harmonic index starts at 1");
        let mut cos = vec![0.0; harmonic];
        cos[harmonic - 1] = amplitude;
        Self {
            sin: vec![0.0; harmonic],
            cos,
        }
    }

    pub fn zero() -> Self {
        Self {
            cos: Vec::new(),
            sin: Vec::new(),
        }
    }

    pub fn degree(&self) -> usize {
        self.cos.len()
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.sin
    }

    /// Per-harmonic power `(a_j² + b_j²) / 2`, indexed from j = 1.
    pub fn harmonic_powers(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.cos
            .iter()
            .zip(&self.sin)
            .enumerate()
            .map(|(i, (a, b))| (i + 1, 0.5 * (a * a + b * b)))
    }

    fn eval_reduced(&self, u: f64) -> f64 {
        self.cos
            .iter()
            .zip(&self.sin)
            .enumerate()
            .map(|(i, (a, b))| {
                let arg = TAU * (i + 1) as f64 * u;
                a * arg.cos() + b * arg.sin()
            })
            .sum()
    }

    fn scaled(&self, c: f64) -> Self {
        Self {
            cos: self.cos.iter().map(|a| a * c).collect(),
            sin: self.sin.iter().map(|b| b * c).collect(),
        }
    }
}

/// Piecewise-linear periodic interpolant of samples at `i / M`, i = 0..M.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledLipschitz {
    values: Vec<f64>,
    mean_correction: f64,
}

impl SampledLipschitz {
    /// Centered sample values (after the mean correction was subtracted).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean_correction(&self) -> f64 {
        self.mean_correction
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest consecutive-sample slope, i.e. the Lipschitz constant of the interpolant.
    pub fn lipschitz_constant(&self) -> f64 {
        let m = self.values.len();
        (0..m)
            .map(|i| (self.values[(i + 1) % m] - self.values[i]).abs() * m as f64)
            .fold(0.0, f64::max)
    }

    #[inline]
    fn node(&self, i: usize) -> f64 {
        self.values[i % self.values.len()]
    }

    fn eval_reduced(&self, u: f64) -> f64 {
        let m = self.values.len();
        let pos = u * m as f64;
        let i = (pos.floor() as usize).min(m - 1);
        let frac = pos - i as f64;
        let v0 = self.values[i];
        let v1 = self.node(i + 1);
        v0 + (v1 - v0) * frac
    }

    /// Exact ∫₀¹ f² of the interpolant.
    fn l2_norm_sq(&self) -> f64 {
        let m = self.values.len();
        let sum: f64 = (0..m)
            .map(|i| {
                let (a, b) = (self.values[i], self.node(i + 1));
                a * a + a * b + b * b
            })
            .sum();
        sum / (3.0 * m as f64)
    }

    /// Exact ∫₀¹ f(u) f(u+t) du. Each grid cell splits into two pieces on which
    /// both factors are linear, so the product integral is closed form.
    fn autocorrelation(&self, t: f64) -> f64 {
        let m = self.values.len();
        let pos = reduce_mod1(t) * m as f64;
        let mut shift = pos.floor() as usize;
        let mut theta = pos - shift as f64;
        if shift >= m {
            shift = 0;
            theta = 0.0;
        }
        let h = 1.0 / m as f64;
        let lerp = |a: f64, b: f64, w: f64| a + (b - a) * w;
        let piece = |len: f64, f0: f64, f1: f64, g0: f64, g1: f64| {
            len * (2.0 * f0 * g0 + f0 * g1 + f1 * g0 + 2.0 * f1 * g1) / 6.0
        };
        let mut acc = 0.0;
        for i in 0..m {
            let f0 = self.values[i];
            let f1 = self.node(i + 1);
            let g_start = lerp(self.node(i + shift), self.node(i + shift + 1), theta);
            let g_kink = self.node(i + shift + 1);
            let g_end = lerp(self.node(i + shift + 1), self.node(i + shift + 2), theta);
            let f_kink = lerp(f0, f1, 1.0 - theta);
            acc += piece((1.0 - theta) * h, f0, f_kink, g_start, g_kink);
            if theta > 0.0 {
                acc += piece(theta * h, f_kink, f1, g_kink, g_end);
            }
        }
        acc
    }
}

/// Center raw samples so the interpolant integrates to zero over one period.
///
/// For a periodic piecewise-linear interpolant on a uniform grid the exact
/// integral equals the sample mean, so subtracting it is exact.
pub fn mean_zero_project(samples: &[f64]) -> Result<SampledLipschitz> {
    if samples.len() < 2 {
        return Err(LabError::invalid(format!(
            "need at least 2 samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(LabError::invalid("samples must be finite"));
    }
    let mean = samples.iter().sum::<f64>() / samples.len() as f64;
    Ok(SampledLipschitz {
        values: samples.iter().map(|v| v - mean).collect(),
        mean_correction: mean,
    })
}

/// A mean-zero, 1-periodic function.
#[derive(Debug, Clone, PartialEq)]
pub enum ShapeFunction {
    Trig(TrigPolynomial),
    Sampled(SampledLipschitz),
}

impl ShapeFunction {
    /// `cos(2πt)`, the workhorse test function.
    pub fn cos1() -> Self {
        ShapeFunction::Trig(TrigPolynomial::cosine(1, 1.0))
    }

    pub fn zero() -> Self {
        ShapeFunction::Trig(TrigPolynomial::zero())
    }

    /// Sample `self` at `m` equally spaced points and rebuild it as an interpolant.
    pub fn resample(&self, m: usize) -> Result<Self> {
        let samples: Vec<f64> = (0..m).map(|i| self.evaluate(i as f64 / m as f64)).collect();
        mean_zero_project(&samples).map(ShapeFunction::Sampled)
    }

    #[inline]
    pub fn evaluate(&self, t: f64) -> f64 {
        self.evaluate_reduced(reduce_mod1(t))
    }

    /// Evaluate at a phase already known to lie in `[0, 1)`.
    #[inline]
    pub fn evaluate_reduced(&self, u: f64) -> f64 {
        match self {
            ShapeFunction::Trig(p) => p.eval_reduced(u),
            ShapeFunction::Sampled(s) => s.eval_reduced(u),
        }
    }

    pub fn l2_norm_sq(&self) -> f64 {
        match self {
            ShapeFunction::Trig(p) => p.harmonic_powers().map(|(_, w)| w).sum(),
            ShapeFunction::Sampled(s) => s.l2_norm_sq(),
        }
    }

    /// `r_f(t) = ∫₀¹ f(u) f(u+t) du`.
    pub fn autocorrelation(&self, t: f64) -> f64 {
        match self {
            ShapeFunction::Trig(p) => {
                let u = reduce_mod1(t);
                p.harmonic_powers()
                    .map(|(j, w)| w * (TAU * j as f64 * u).cos())
                    .sum()
            }
            ShapeFunction::Sampled(s) => s.autocorrelation(t),
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ShapeFunction::Trig(p) => p.cos.iter().chain(&p.sin).all(|c| *c == 0.0),
            ShapeFunction::Sampled(s) => s.values.iter().all(|v| *v == 0.0),
        }
    }

    /// `c · f`.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            ShapeFunction::Trig(p) => ShapeFunction::Trig(p.scaled(c)),
            ShapeFunction::Sampled(s) => ShapeFunction::Sampled(SampledLipschitz {
                values: s.values.iter().map(|v| v * c).collect(),
                mean_correction: s.mean_correction * c,
            }),
        }
    }

    pub fn to_spec(&self) -> ShapeSpec {
        match self {
            ShapeFunction::Trig(p) => ShapeSpec::Trig {
                cos: p.cos.clone(),
                sin: p.sin.clone(),
            },
            ShapeFunction::Sampled(s) => ShapeSpec::Sampled {
                values: s.values.clone(),
            },
        }
    }
}

/// JSON wire form: `{"type":"trig","cos":[..],"sin":[..]}` or
/// `{"type":"sampled","values":[..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ShapeSpec {
    Trig {
        #[serde(default)]
        cos: Vec<f64>,
        #[serde(default)]
        sin: Vec<f64>,
    },
    Sampled {
        values: Vec<f64>,
    },
}

impl TryFrom<ShapeSpec> for ShapeFunction {
    type Error = LabError;

    fn try_from(spec: ShapeSpec) -> Result<Self> {
        match spec {
            ShapeSpec::Trig { cos, sin } => TrigPolynomial::new(cos, sin).map(ShapeFunction::Trig),
            ShapeSpec::Sampled { values } => mean_zero_project(&values).map(ShapeFunction::Sampled),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cos_plus_sin2() -> ShapeFunction {
        ShapeFunction::Trig(TrigPolynomial::new(vec![1.0], vec![0.0, 1.0]).unwrap())
    }

    #[test]
    fn evaluate_examples() {
        let f = ShapeFunction::cos1();
        assert_eq!(f.evaluate(0.0), 1.0);
        assert!(f.evaluate(7.25).abs() <= 1e-12);
        assert_eq!(ShapeFunction::zero().evaluate(0.3), 0.0);
    }

    #[test]
    fn l2_norm_examples() {
        assert_eq!(ShapeFunction::cos1().l2_norm_sq(), 0.5);
        assert_eq!(ShapeFunction::zero().l2_norm_sq(), 0.0);
        assert_eq!(cos_plus_sin2().l2_norm_sq(), 1.0);
    }

    #[test]
    fn autocorrelation_examples() {
        let f = ShapeFunction::cos1();
        assert_eq!(f.autocorrelation(0.0), 0.5);
        assert!((f.autocorrelation(0.5) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn autocorrelation_quarter_shift_against_quadrature() {
        // oracle: midpoint rule at 2^16 points (exact for trig polys of low degree)
        let f = cos_plus_sin2();
        let n = 1usize << 16;
        let oracle: f64 = (0..n)
            .map(|i| {
                let u = (i as f64 + 0.5) / n as f64;
                f.evaluate(u) * f.evaluate(u + 0.25)
            })
            .sum::<f64>()
            / n as f64;
        assert!((oracle + 0.5).abs() < 1e-10);
        assert!((f.autocorrelation(0.25) - oracle).abs() < 1e-10);
    }

    #[test]
    fn mean_zero_project_examples() {
        let s = mean_zero_project(&[3.0, 3.0, 3.0, 3.0]).unwrap();
        assert!(s.values().iter().all(|v| *v == 0.0));
        assert_eq!(s.mean_correction(), 3.0);

        let s = mean_zero_project(&[1.0, -1.0]).unwrap();
        assert_eq!(s.mean_correction(), 0.0);

        let s = mean_zero_project(&[0.0, 1.0, 0.0, -1.0]).unwrap();
        assert_eq!(s.mean_correction(), 0.0);
        let f = ShapeFunction::Sampled(s);
        assert!((f.l2_norm_sq() - 1.0 / 3.0).abs() < 1e-15);
        // brute-force oracle of the squared interpolant
        let n = 1 << 16;
        let q: f64 = (0..n)
            .map(|i| f.evaluate((i as f64 + 0.5) / n as f64).powi(2))
            .sum::<f64>()
            / n as f64;
        assert!((q - 1.0 / 3.0).abs() < 1e-8);
        assert!((f.autocorrelation(0.0) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn too_few_samples_rejected() {
        assert!(matches!(mean_zero_project(&[1.0]), Err(LabError::InvalidInput(_))));
        assert!(mean_zero_project(&[]).is_err());
    }

    #[test]
    fn sampled_autocorrelation_matches_brute_force() {
        let f = ShapeFunction::Sampled(mean_zero_project(&[0.3, -1.2, 2.0, 0.1, -0.7]).unwrap());
        let n = 1 << 17;
        for &t in &[0.0, 0.13, 0.2, 0.5, 0.777, -0.31] {
            let oracle: f64 = (0..n)
                .map(|i| {
                    let u = (i as f64 + 0.5) / n as f64;
                    f.evaluate(u) * f.evaluate(u + t)
                })
                .sum::<f64>()
                / n as f64;
            assert!((f.autocorrelation(t) - oracle).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn trig_resampled_agrees() {
        let f = ShapeFunction::Trig(TrigPolynomial::new(vec![1.0, 0.0, 0.3], vec![0.0, 1.0]).unwrap());
        let g = f.resample(1 << 14).unwrap();
        assert!((f.l2_norm_sq() - g.l2_norm_sq()).abs() < 1e-4);
        for &t in &[0.0, 0.1, 0.25, 0.4, 0.9] {
            assert!((f.autocorrelation(t) - g.autocorrelation(t)).abs() < 1e-4);
        }
    }

    #[test]
    fn json_round_trip() {
        let spec: ShapeSpec = serde_json::from_str(r#"{"type":"trig","cos":[1.0],"sin":[]}"#).unwrap();
        let f = ShapeFunction::try_from(spec).unwrap();
        assert_eq!(f, ShapeFunction::cos1());
        let spec: ShapeSpec = serde_json::from_str(r#"{"type":"sampled","values":[2,4]}"#).unwrap();
        let f = ShapeFunction::try_from(spec).unwrap();
        assert_eq!(f.evaluate(0.0), -1.0);
    }

    fn arb_shape() -> impl Strategy<Value = ShapeFunction> {
        prop_oneof![
            (prop::collection::vec(-2.0..2.0f64, 0..5), prop::collection::vec(-2.0..2.0f64, 0..5))
                .prop_map(|(c, s)| ShapeFunction::Trig(TrigPolynomial::new(c, s).unwrap())),
            prop::collection::vec(-2.0..2.0f64, 2..40)
                .prop_map(|v| ShapeFunction::Sampled(mean_zero_project(&v).unwrap())),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn periodic(f in arb_shape(), t in -50.0..50.0f64) {
            prop_assert!((f.evaluate(t) - f.evaluate(t + 1.0)).abs() <= 1e-12);
        }
    }

    proptest! {
        #[test]
        fn autocorrelation_even_and_bounded(f in arb_shape(), t in -3.0..3.0f64) {
            let r = f.autocorrelation(t);
            prop_assert!((r - f.autocorrelation(-t)).abs() <= 1e-12);
            prop_assert!(r.abs() <= f.l2_norm_sq() + 1e-12);
        }

        #[test]
        fn autocorrelation_at_zero_is_norm(f in arb_shape()) {
            prop_assert!((f.autocorrelation(0.0) - f.l2_norm_sq()).abs() <= 1e-12);
        }
    }
}
