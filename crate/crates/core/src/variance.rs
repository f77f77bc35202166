//! The limiting variance `A_x = ‖f‖² + 2 Σ_{k≥1} E f(U) f(U + S_k x)`,
//! computed three independent ways.
//!
//! * closed form: for a trigonometric polynomial the k-th correlation is
//!   `Σ_j w_j Re φ(2πjx)^k` with `w_j = (a_j² + b_j²)/2`, a geometric series;
//! * truncated series: each correlation is `∫ r_f(t) q_k(t) dt` against the
//!   gridded mod-1 density `q_k`, with a tail bound from the fitted decay;
//! * Monte Carlo: direct simulation of `U` and an independent walk.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{require_nonzero_x, LabError, Result};
use crate::periodic::ShapeFunction;
use crate::seeding::{chunked_reduce, derive_seed, rng_from_seed, task, Moments};
use crate::walk::{DecayFit, GapDistribution, Mod1Spectrum, PhaseWalk};

pub const DEFAULT_GRID: usize = 1 << 12;
pub const DEFAULT_TRUNCATION: u32 = 60;

/// All three estimates of `A_x` side by side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceReport {
    pub x: f64,
    pub closed_form: Option<f64>,
    pub series_truncated: f64,
    /// `None` when the decay fit was degenerate.
    pub series_tail_bound: Option<f64>,
    pub monte_carlo: f64,
    pub monte_carlo_std_err: f64,
    pub truncation_k: u32,
    pub grid_size: usize,
    pub reps: u64,
}

impl VarianceReport {
    /// Best available point estimate: closed form, else the series.
    pub fn best(&self) -> f64 {
        self.closed_form.unwrap_or(self.series_truncated)
    }
}

pub fn ax_closed_form(f: &ShapeFunction, dist: &GapDistribution, x: f64) -> Result<f64> {
    require_nonzero_x(x)?;
    let ShapeFunction::Trig(poly) = f else {
        return Err(LabError::Unsupported(
            "closed form needs a trigonometric polynomial; use the series or Monte Carlo estimate"
                .into(),
        ));
    };
    let mut total = 0.0;
    for (j, power) in poly.harmonic_powers() {
        if power == 0.0 {
            continue;
        }
        let phi = dist.char_fn(TAU * j as f64 * x);
        let one = Complex64::new(1.0, 0.0);
        total += power * (1.0 + 2.0 * (phi / (one - phi)).re);
    }
    Ok(total)
}

/// Truncated series estimate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeriesEstimate {
    pub value: f64,
    pub tail_bound: Option<f64>,
    /// `E f(U) f(U + S_k x)` for k = 1..=K.
    pub terms: Vec<f64>,
    pub decay: Option<DecayFit>,
}

pub fn ax_series(
    f: &ShapeFunction,
    dist: &GapDistribution,
    x: f64,
    truncation: u32,
    grid_size: usize,
) -> Result<SeriesEstimate> {
    if truncation == 0 {
        return Err(LabError::invalid("truncation K must be >= 1"));
    }
    let spectrum = Mod1Spectrum::new(dist, x, grid_size)?;
    let norm = f.l2_norm_sq();
    // r_f at the two possible sample lattices (offset 0 and 1/2)
    let g = grid_size as f64;
    let lattice = |offset: f64| -> Vec<f64> {
        (0..grid_size)
            .map(|i| f.autocorrelation((i as f64 + offset) / g))
            .collect()
    };
    let r_half = lattice(0.5);
    let r_edge = lattice(0.0);

    let mut terms = Vec::with_capacity(truncation as usize);
    for k in 1..=truncation {
        let q = spectrum.density(k)?;
        let r = if q.offset == 0.0 { &r_edge } else { &r_half };
        let term = q.values.iter().zip(r).map(|(p, r)| p * r).sum::<f64>() / g;
        terms.push(term);
    }
    let value = norm + 2.0 * terms.iter().sum::<f64>();

    let (tail_bound, decay) = match spectrum.fit_decay(truncation.max(8)) {
        Ok(fit) => {
            let tail = 2.0 * norm * fit.envelope(truncation + 1) / (1.0 - fit.w);
            (Some(tail), Some(fit))
        }
        Err(LabError::DegenerateFit(_)) if spectrum.is_uniform_to_precision() => (Some(0.0), None),
        Err(LabError::DegenerateFit(_)) => (None, None),
        Err(e) => return Err(e),
    };
    Ok(SeriesEstimate {
        value,
        tail_bound,
        terms,
        decay,
    })
}

/// Smallest K whose tail bound is below `1e-6 · ‖f‖²`.
pub fn default_truncation(dist: &GapDistribution, x: f64, grid_size: usize) -> Result<u32> {
    let spectrum = Mod1Spectrum::new(dist, x, grid_size)?;
    match spectrum.fit_decay(64) {
        Ok(fit) => {
            // 2 C w^{K+1} / (1 - w) < 1e-6
            let target = 1e-6 * (1.0 - fit.w) / (2.0 * fit.c);
            let k = (target.ln() / fit.w.ln()).ceil() - 1.0;
            Ok(k.clamp(1.0, 100_000.0) as u32)
        }
        Err(LabError::DegenerateFit(_)) => Ok(1),
        Err(e) => Err(e),
    }
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_err: f64,
}

pub fn ax_monte_carlo(
    f: &ShapeFunction,
    dist: &GapDistribution,
    x: f64,
    truncation: u32,
    reps: u64,
    seed: u64,
) -> Result<McEstimate> {
    require_nonzero_x(x)?;
    if reps < 1000 {
        return Err(LabError::invalid(format!("need at least 1000 replications, got {reps}")));
    }
    let moments = chunked_reduce(
        reps,
        Moments::default,
        |acc, r| {
            let mut rng = rng_from_seed(derive_seed(seed, task::AX_MONTE_CARLO, r));
            let u: f64 = rng.random();
            let fu = f.evaluate_reduced(u);
            let walk = PhaseWalk::with_rng(*dist, x, &mut rng).expect("x checked above");
            let cross: f64 = walk.take(truncation as usize).map(|t| f.evaluate(u + t)).sum();
            acc.push(2.0 * fu * cross);
        },
        |a, b| a.merge(b),
    );
    Ok(McEstimate {
        estimate: f.l2_norm_sq() + moments.mean(),
        std_err: moments.std_err(),
    })
}

/// Run all three methods.
pub fn variance_report(
    f: &ShapeFunction,
    dist: &GapDistribution,
    x: f64,
    truncation: u32,
    grid_size: usize,
    reps: u64,
    seed: u64,
) -> Result<VarianceReport> {
    let closed_form = match ax_closed_form(f, dist, x) {
        Ok(v) => Some(v),
        Err(LabError::Unsupported(_)) => None,
        Err(e) => return Err(e),
    };
    let series = ax_series(f, dist, x, truncation, grid_size)?;
    let mc = ax_monte_carlo(f, dist, x, truncation, reps, seed)?;
    Ok(VarianceReport {
        x,
        closed_form,
        series_truncated: series.value,
        series_tail_bound: series.tail_bound,
        monte_carlo: mc.estimate,
        monte_carlo_std_err: mc.std_err,
        truncation_k: truncation,
        grid_size,
        reps,
    })
}

/// `A_x` for downstream normalizations: closed form when available,
/// otherwise the series at default settings.
pub fn reference_ax(f: &ShapeFunction, dist: &GapDistribution, x: f64) -> Result<f64> {
    match ax_closed_form(f, dist, x) {
        Ok(v) => Ok(v),
        Err(LabError::Unsupported(_)) => {
            let k = default_truncation(dist, x, DEFAULT_GRID)?.max(DEFAULT_TRUNCATION);
            Ok(ax_series(f, dist, x, k, DEFAULT_GRID)?.value)
        }
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::periodic::{mean_zero_project, TrigPolynomial};
    use std::f64::consts::PI;

    fn unif01() -> GapDistribution {
        GapDistribution::uniform(0.0, 1.0).unwrap()
    }

    /// Brute-force oracle: raw (unreduced) walk sums, fresh generator.
    fn brute_force_ax(f: &ShapeFunction, d: &GapDistribution, x: f64, k: usize, reps: usize) -> (f64, f64) {
        let mut rng = rng_from_seed(0xB00F);
        let mut m = Moments::default();
        for _ in 0..reps {
            let u: f64 = rng.random();
            let mut s = 0.0;
            let mut acc = 0.0;
            for _ in 0..k {
                s += d.sample(&mut rng);
                acc += f.evaluate(u + s * x);
            }
            m.push(2.0 * f.evaluate(u) * acc);
        }
        (f.l2_norm_sq() + m.mean(), m.std_err())
    }

    #[test]
    fn closed_form_examples() {
        let f = ShapeFunction::cos1();
        assert!((ax_closed_form(&f, &unif01(), 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(ax_closed_form(&ShapeFunction::zero(), &unif01(), 1.0).unwrap(), 0.0);
        let half = ax_closed_form(&f, &unif01(), 0.5).unwrap();
        let exact = 0.5 * (1.0 - 8.0 / (PI * PI + 4.0));
        assert!((half - exact).abs() < 1e-14);
        assert!((half - 0.2116).abs() < 1e-4);
    }

    #[test]
    fn closed_form_confirmed_by_brute_force() {
        let f = ShapeFunction::cos1();
        let (est, se) = brute_force_ax(&f, &unif01(), 0.5, 60, 200_000);
        let cf = ax_closed_form(&f, &unif01(), 0.5).unwrap();
        assert!((est - cf).abs() < 4.0 * se, "{est} ± {se} vs {cf}");
    }

    #[test]
    fn closed_form_errors() {
        let s = ShapeFunction::Sampled(mean_zero_project(&[0.0, 1.0, 0.0, -1.0]).unwrap());
        assert!(matches!(ax_closed_form(&s, &unif01(), 0.5), Err(LabError::Unsupported(_))));
        assert!(matches!(
            ax_closed_form(&ShapeFunction::cos1(), &unif01(), 0.0),
            Err(LabError::InvalidInput(_))
        ));
    }

    #[test]
    fn series_examples() {
        let f = ShapeFunction::cos1();
        let s = ax_series(&f, &unif01(), 1.0, 60, 1 << 12).unwrap();
        assert!((s.value - 0.5).abs() < 1e-8);
        assert_eq!(s.tail_bound, Some(0.0));

        let s60 = ax_series(&f, &unif01(), 0.5, 60, 1 << 12).unwrap();
        let cf = ax_closed_form(&f, &unif01(), 0.5).unwrap();
        assert!((s60.value - cf).abs() < 1e-4, "{} vs {cf}", s60.value);

        let s1 = ax_series(&f, &unif01(), 0.5, 1, 1 << 12).unwrap();
        assert!((s1.value - s60.value).abs() <= s1.tail_bound.unwrap());
    }

    #[test]
    fn series_terms_respect_envelope() {
        let f = ShapeFunction::Trig(TrigPolynomial::new(vec![1.0, 0.5], vec![0.0, 0.0, 0.7]).unwrap());
        let d = GapDistribution::triangular(0.1, 0.3, 0.9).unwrap();
        let s = ax_series(&f, &d, 0.8, 40, 1 << 12).unwrap();
        let fit = s.decay.as_ref().unwrap();
        let norm = f.l2_norm_sq();
        for (k, term) in s.terms.iter().enumerate().skip(1) {
            let k = k as u32 + 1;
            assert!(term.abs() <= norm * fit.envelope(k) * (1.0 + 1e-9), "k={k}");
        }
    }

    #[test]
    fn monte_carlo_examples() {
        let z = ax_monte_carlo(&ShapeFunction::zero(), &unif01(), 0.5, 60, 1000, 1).unwrap();
        assert_eq!((z.estimate, z.std_err), (0.0, 0.0));
        assert!(ax_monte_carlo(&ShapeFunction::cos1(), &unif01(), 0.5, 60, 999, 1).is_err());
        assert!(ax_monte_carlo(&ShapeFunction::cos1(), &unif01(), 0.0, 60, 1000, 1).is_err());

        let f = ShapeFunction::cos1();
        let mc = ax_monte_carlo(&f, &unif01(), 1.0, 60, 100_000, 7).unwrap();
        assert!((mc.estimate - 0.5).abs() < 3.0 * mc.std_err);
    }

    #[test]
    fn three_way_agreement_on_trig_cases() {
        let cases = vec![
            (ShapeFunction::cos1(), GapDistribution::uniform(0.0, 0.5).unwrap(), 1.0),
            (
                ShapeFunction::Trig(TrigPolynomial::new(vec![0.5], vec![0.0, 1.0]).unwrap()),
                GapDistribution::triangular(0.2, 0.4, 1.0).unwrap(),
                0.9,
            ),
            (
                ShapeFunction::Trig(TrigPolynomial::new(vec![0.0, 0.0, 1.0], vec![0.3]).unwrap()),
                GapDistribution::raised_cosine(0.5, 1.0).unwrap(),
                -0.6,
            ),
        ];
        for (f, d, x) in cases {
            let r = variance_report(&f, &d, x, 60, 1 << 12, 40_000, 11).unwrap();
            let cf = r.closed_form.unwrap();
            assert!(
                (cf - r.series_truncated).abs() <= r.series_tail_bound.unwrap() + 1e-4,
                "{r:?}"
            );
            assert!((cf - r.monte_carlo).abs() <= 4.0 * r.monte_carlo_std_err, "{r:?}");
            assert!(cf >= -1e-12);
        }
    }

    #[test]
    fn scaling_by_constant() {
        let f = ShapeFunction::Trig(TrigPolynomial::new(vec![1.0, 0.2], vec![0.4]).unwrap());
        let d = GapDistribution::uniform(0.3, 1.1).unwrap();
        let base = ax_closed_form(&f, &d, 0.7).unwrap();
        let scaled = ax_closed_form(&f.scaled(3.0), &d, 0.7).unwrap();
        assert!((scaled - 9.0 * base).abs() <= 1e-12 * scaled.abs());

        let a = ax_monte_carlo(&f, &d, 0.7, 30, 5000, 3).unwrap();
        let b = ax_monte_carlo(&f.scaled(3.0), &d, 0.7, 30, 5000, 3).unwrap();
        assert!((b.estimate - 9.0 * a.estimate).abs() <= b.std_err);
    }

    #[test]
    fn sampled_function_series_and_mc_agree() {
        let f = ShapeFunction::Sampled(mean_zero_project(&[0.0, 1.0, 0.5, -0.2, -1.0, -0.3]).unwrap());
        let d = GapDistribution::uniform(0.0, 0.5).unwrap();
        let s = ax_series(&f, &d, 1.0, 60, 1 << 10).unwrap();
        let mc = ax_monte_carlo(&f, &d, 1.0, 60, 50_000, 5).unwrap();
        assert!((s.value - mc.estimate).abs() < 4.0 * mc.std_err + s.tail_bound.unwrap());
    }

    #[test]
    fn default_truncation_meets_target() {
        let d = GapDistribution::uniform(0.0, 1.0).unwrap();
        let k = default_truncation(&d, 0.5, 1 << 12).unwrap();
        let f = ShapeFunction::cos1();
        let s = ax_series(&f, &d, 0.5, k, 1 << 12).unwrap();
        assert!(s.tail_bound.unwrap() < 1e-6 * f.l2_norm_sq());
        assert_eq!(default_truncation(&d, 1.0, 1 << 12).unwrap(), 1);
    }
}
