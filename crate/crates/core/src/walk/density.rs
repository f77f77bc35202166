use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;

use super::GapDistribution;
use crate::error::{require_nonzero_x, LabError, Result};

/// Gaps below this are treated as floating-point noise by [`decay_fit`].
pub const UNDERFLOW_FLOOR: f64 = 1e-14;

/// Density of `S_n x mod 1` on a uniform grid of `G` points.
///
/// Sample `i` sits at phase `(i + offset) / G`. The one-step density holds
/// exact cell averages at cell centers (`offset = 1/2`); every further
/// convolution moves the sample points by half a cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Mod1Density {
    pub grid_size: usize,
    pub step: u32,
    pub offset: f64,
    pub values: Vec<f64>,
}

impl Mod1Density {
    pub fn location(&self, i: usize) -> f64 {
        (i as f64 + self.offset) / self.grid_size as f64
    }

    /// `(1/G) Σ values`, which is 1 for a probability density.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.grid_size as f64
    }

    /// `∫ g(t) p(t) dt`, treating each sample as a point mass `value / G`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, g: F) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v * g(self.location(i)))
            .sum::<f64>()
            / self.grid_size as f64
    }
}

/// `max_i |p_i - 1|`.
pub fn uniformity_gap(p: &Mod1Density) -> f64 {
    p.values.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max)
}

fn check_grid(grid_size: usize) -> Result<()> {
    if grid_size < 256 || !grid_size.is_power_of_two() {
        return Err(LabError::invalid(format!(
            "grid size must be a power of two >= 256, got {grid_size}"
        )));
    }
    Ok(())
}

/// Exact probability mass of `x·X mod 1` in each cell `[i/G, (i+1)/G)`.
fn cell_masses(dist: &GapDistribution, x: f64, grid_size: usize) -> Vec<f64> {
    let g = grid_size as f64;
    // P(x X < y)
    let cdf_scaled = |y: f64| {
        if x > 0.0 {
            dist.cdf(y / x)
        } else {
            1.0 - dist.cdf(y / x)
        }
    };
    let ends = [x * dist.lower(), x * dist.support_bound()];
    let lo = ends[0].min(ends[1]).floor() as i64;
    let hi = ends[0].max(ends[1]).floor() as i64;
    let mut masses = vec![0.0; grid_size];
    for shift in lo..=hi {
        let base = shift as f64;
        let mut prev = cdf_scaled(base);
        for (i, m) in masses.iter_mut().enumerate() {
            let next = cdf_scaled(base + (i + 1) as f64 / g);
            // for x < 0 the complement CDF is decreasing
            *m += (next - prev).abs();
            prev = next;
        }
    }
    masses
}

/// Discrete spectrum of the one-step phase law; powers of it give every
/// convolution step by a single inverse transform.
pub struct Mod1Spectrum {
    grid_size: usize,
    base_masses: Vec<f64>,
    base_spectrum: Vec<Complex64>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Mod1Spectrum {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Mod1Spectrum").field("grid_size", &self.grid_size).finish()
    }
}

impl Mod1Spectrum {
    pub fn new(dist: &GapDistribution, x: f64, grid_size: usize) -> Result<Self> {
        require_nonzero_x(x)?;
        check_grid(grid_size)?;
        let base_masses = cell_masses(dist, x, grid_size);
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(grid_size);
        let inverse = planner.plan_fft_inverse(grid_size);
        let mut base_spectrum: Vec<Complex64> =
            base_masses.iter().map(|m| Complex64::new(*m, 0.0)).collect();
        forward.process(&mut base_spectrum);
        Ok(Self {
            grid_size,
            base_masses,
            base_spectrum,
            inverse,
        })
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    /// Decay fit over steps 2..=n_max.
    pub fn fit_decay(&self, n_max: u32) -> Result<DecayFit> {
        if n_max < 8 {
            return Err(LabError::invalid(format!("n_max must be >= 8, got {n_max}")));
        }
        decay_fit_with(self, n_max)
    }

    /// Whether the two-step density is already uniform below the underflow floor,
    /// in which case every later step is too.
    pub fn is_uniform_to_precision(&self) -> bool {
        self.density(2)
            .map(|p| uniformity_gap(&p) < UNDERFLOW_FLOOR)
            .unwrap_or(false)
    }

    /// Density of the `step`-fold circular convolution.
    pub fn density(&self, step: u32) -> Result<Mod1Density> {
        if step == 0 {
            return Err(LabError::invalid("convolution step must be >= 1"));
        }
        let g = self.grid_size;
        if step == 1 {
            return Ok(Mod1Density {
                grid_size: g,
                step,
                offset: 0.5,
                values: self.base_masses.iter().map(|m| m * g as f64).collect(),
            });
        }
        let mut buf: Vec<Complex64> = self.base_spectrum.iter().map(|c| c.powu(step)).collect();
        self.inverse.process(&mut buf);
        // unnormalized inverse: buf = G * masses = density values
        let roll = (step / 2) as usize % g;
        let mut values = vec![0.0; g];
        for (i, c) in buf.iter().enumerate() {
            values[(i + roll) % g] = c.re;
        }
        Ok(Mod1Density {
            grid_size: g,
            step,
            offset: if step % 2 == 1 { 0.5 } else { 0.0 },
            values,
        })
    }
}

/// Density of `S_n x mod 1` on `grid_size` points.
pub fn mod1_density(dist: &GapDistribution, x: f64, step: u32, grid_size: usize) -> Result<Mod1Density> {
    Mod1Spectrum::new(dist, x, grid_size)?.density(step)
}

/// Geometric decay fit `gap_n ≈ C w^n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    /// Smallest constant with `gap_n <= c · w^n` at every fitted step.
    pub c: f64,
    /// Least-squares intercept, `exp(intercept)`.
    pub c_fit: f64,
    pub w: f64,
    pub r_squared: f64,
    /// `(n, gap)` for every step in 2..=n_max, including dropped ones.
    pub points: Vec<(u32, f64)>,
}

impl DecayFit {
    pub fn envelope(&self, n: u32) -> f64 {
        self.c * self.w.powi(n as i32)
    }
}

pub fn decay_fit(dist: &GapDistribution, x: f64, n_max: u32, grid_size: usize) -> Result<DecayFit> {
    Mod1Spectrum::new(dist, x, grid_size)?.fit_decay(n_max)
}

fn decay_fit_with(spectrum: &Mod1Spectrum, n_max: u32) -> Result<DecayFit> {
    let points = (2..=n_max)
        .map(|n| spectrum.density(n).map(|p| (n, uniformity_gap(&p))))
        .collect::<Result<Vec<_>>>()?;
    let kept: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, gap)| *gap >= UNDERFLOW_FLOOR)
        .map(|&(n, gap)| (n as f64, gap.ln()))
        .collect();
    if kept.len() < 2 {
        return Err(LabError::DegenerateFit(format!(
            "only {} of {} steps have a uniformity gap above {UNDERFLOW_FLOOR:e}",
            kept.len(),
            points.len()
        )));
    }
    let k = kept.len() as f64;
    let mx = kept.iter().map(|p| p.0).sum::<f64>() / k;
    let my = kept.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = kept.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = kept.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = kept.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let w = slope.exp();
    if !(w > 0.0 && w < 1.0) {
        return Err(LabError::DegenerateFit(format!("fitted rate w = {w} is not in (0, 1)")));
    }
    let ss_res: f64 = kept.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let c = kept
        .iter()
        .map(|p| (p.1 - slope * p.0).exp())
        .fold(0.0, f64::max);
    Ok(DecayFit {
        c,
        c_fit: intercept.exp(),
        w,
        r_squared,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn direct_circular_power(masses: &[f64], n: u32) -> Vec<f64> {
        let g = masses.len();
        let mut cur = masses.to_vec();
        for _ in 1..n {
            let mut next = vec![0.0; g];
            for (i, a) in cur.iter().enumerate() {
                if *a == 0.0 {
                    continue;
                }
                for (j, b) in masses.iter().enumerate() {
                    next[(i + j) % g] += a * b;
                }
            }
            cur = next;
        }
        cur
    }

    #[test]
    fn uniform_unit_gaps_are_fixed_point() {
        let d = GapDistribution::uniform(0.0, 1.0).unwrap();
        let s = Mod1Spectrum::new(&d, 1.0, 1024).unwrap();
        for n in [1, 2, 7, 30] {
            let p = s.density(n).unwrap();
            assert!(p.values.iter().all(|v| (v - 1.0).abs() <= 1e-10));
        }
    }

    #[test]
    fn half_support_single_step() {
        let d = GapDistribution::uniform(0.0, 0.5).unwrap();
        let p = mod1_density(&d, 1.0, 1, 512).unwrap();
        for (i, v) in p.values.iter().enumerate() {
            let expect = if i < 256 { 2.0 } else { 0.0 };
            assert!((v - expect).abs() < 1e-12);
        }
        assert_eq!(uniformity_gap(&p), 1.0);
    }

    #[test]
    fn fft_power_matches_direct_convolution() {
        let d = GapDistribution::triangular(0.1, 0.3, 0.8).unwrap();
        let g = 256;
        let s = Mod1Spectrum::new(&d, 1.3, g).unwrap();
        let masses = cell_masses(&d, 1.3, g);
        for n in [2u32, 3, 6] {
            let direct = direct_circular_power(&masses, n);
            let p = s.density(n).unwrap();
            let roll = (n / 2) as usize;
            for (i, d) in direct.iter().enumerate() {
                let v = p.values[(i + roll) % g];
                assert!((v - d * g as f64).abs() < 1e-10, "n={n} i={i}");
            }
        }
    }

    #[test]
    fn decay_rate_against_leading_fourier_coefficient() {
        // oracle: gap_n ≈ 2 |c_1|^n with |c_1| = 2/π
        let d = GapDistribution::uniform(0.0, 0.5).unwrap();
        let s = Mod1Spectrum::new(&d, 1.0, 1 << 12).unwrap();
        for n in [10u32, 20] {
            let gap = uniformity_gap(&s.density(n).unwrap());
            let oracle = (2.0 / PI).powi(n as i32);
            assert!(gap / oracle < 3.0 && gap / oracle > 1.0 / 3.0, "n={n} gap={gap}");
        }
    }

    #[test]
    fn direct_convolution_oracle_at_ten_steps() {
        let d = GapDistribution::uniform(0.0, 0.5).unwrap();
        let g = 1024;
        let masses = cell_masses(&d, 1.0, g);
        let direct = direct_circular_power(&masses, 10);
        let direct_gap = direct.iter().map(|m| (m * g as f64 - 1.0).abs()).fold(0.0, f64::max);
        let gap = uniformity_gap(&mod1_density(&d, 1.0, 10, g).unwrap());
        assert!((gap - direct_gap).abs() < 1e-12);
        assert!(gap / (2.0 / PI).powi(10) < 3.0);
    }

    #[test]
    fn decay_fit_examples() {
        let d = GapDistribution::uniform(0.0, 0.5).unwrap();
        let fit = decay_fit(&d, 1.0, 30, 1 << 12).unwrap();
        assert!((0.55..=0.72).contains(&fit.w), "w = {}", fit.w);
        for &(n, gap) in &fit.points {
            assert!(gap <= fit.envelope(n) * (1.0 + 1e-12));
        }

        let u = GapDistribution::uniform(0.0, 1.0).unwrap();
        assert!(matches!(decay_fit(&u, 1.0, 30, 1 << 12), Err(LabError::DegenerateFit(_))));

        let t = GapDistribution::triangular(0.0, 0.25, 0.5).unwrap();
        let fit = decay_fit(&t, 1.0, 30, 1 << 12).unwrap();
        assert!(fit.r_squared >= 0.98, "r2 = {}", fit.r_squared);

        assert!(decay_fit(&d, 1.0, 7, 1 << 12).is_err());
    }

    #[test]
    fn invalid_grid_and_frequency() {
        let d = GapDistribution::uniform(0.0, 0.5).unwrap();
        assert!(mod1_density(&d, 1.0, 1, 128).is_err());
        assert!(mod1_density(&d, 1.0, 1, 300).is_err());
        assert!(mod1_density(&d, 0.0, 1, 256).is_err());
        assert!(mod1_density(&d, 1.0, 0, 256).is_err());
    }

    fn families() -> Vec<(GapDistribution, f64)> {
        vec![
            (GapDistribution::uniform(0.0, 0.5).unwrap(), 1.0),
            (GapDistribution::uniform(0.2, 0.9).unwrap(), -2.5),
            (GapDistribution::triangular(0.0, 0.25, 0.5).unwrap(), 1.0),
            (GapDistribution::raised_cosine(0.1, 0.6).unwrap(), 0.7),
            (GapDistribution::triangular(0.5, 1.0, 1.5).unwrap(), 13.1),
        ]
    }

    #[test]
    fn mass_conservation_and_nonnegativity() {
        for (d, x) in families() {
            let s = Mod1Spectrum::new(&d, x, 1 << 10).unwrap();
            for n in 1..=40 {
                let p = s.density(n).unwrap();
                assert!((p.mass() - 1.0).abs() <= 1e-10, "{d:?} n={n}");
                assert!(p.values.iter().all(|v| *v >= -1e-12));
            }
        }
    }

    #[test]
    fn monotone_mixing() {
        for (d, x) in families() {
            let s = Mod1Spectrum::new(&d, x, 1 << 10).unwrap();
            let gaps: Vec<f64> = (1..=40).map(|n| uniformity_gap(&s.density(n).unwrap())).collect();
            for w in gaps.windows(2) {
                assert!(w[1] <= w[0] * (1.0 + 1e-6) + 1e-15, "{d:?}: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn grid_stability() {
        for (d, x) in families() {
            let coarse = Mod1Spectrum::new(&d, x, 1 << 11).unwrap();
            let fine = Mod1Spectrum::new(&d, x, 1 << 12).unwrap();
            for n in 1..=30 {
                let a = uniformity_gap(&coarse.density(n).unwrap());
                if a <= 1e-10 {
                    continue;
                }
                let b = uniformity_gap(&fine.density(n).unwrap());
                assert!((a - b).abs() / a < 0.05, "{d:?} n={n}: {a} vs {b}");
            }
        }
    }
}
