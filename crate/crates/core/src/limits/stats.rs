//! Goodness-of-fit helpers.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// One-sample Kolmogorov–Smirnov statistic `sup |F_n - F|`. Sorts `data`.
pub fn ks_statistic<F: Fn(f64) -> f64>(data: &mut [f64], cdf: F) -> f64 {
    data.sort_by(f64::total_cmp);
    let n = data.len() as f64;
    data.iter()
        .enumerate()
        .map(|(i, &v)| {
            let c = cdf(v);
            (c - i as f64 / n).max((i + 1) as f64 / n - c)
        })
        .fold(0.0, f64::max)
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // small-lambda form converges faster: P(K <= l) = √(2π)/l Σ exp(-(2k-1)²π²/(8l²))
        let y = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let cdf: f64 = (1..=20)
            .map(|k| ((2 * k - 1) as f64).powi(2) * y)
            .map(f64::exp)
            .sum::<f64>()
            * (2.0 * std::f64::consts::PI).sqrt()
            / lambda;
        (1.0 - cdf).clamp(0.0, 1.0)
    } else {
        let s: f64 = (1..=100)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// p-value for a KS statistic `d` from `n` observations, with Stephens'
/// finite-sample correction.
pub fn ks_p_value(n: usize, d: f64) -> f64 {
    let sn = (n as f64).sqrt();
    kolmogorov_survival((sn + 0.12 + 0.11 / sn) * d)
}

/// KS statistic and p-value of `data` against the standard normal law.
pub fn ks_standard_normal(data: &mut [f64]) -> (f64, f64) {
    let normal = Normal::standard();
    let d = ks_statistic(data, |v| normal.cdf(v));
    (d, ks_p_value(data.len(), d))
}

/// Pearson chi-square uniformity test on `[0, 1)` values with `bins` cells.
pub fn chi_square_uniform(values: &[f64], bins: usize) -> (f64, f64) {
    let mut counts = vec![0u64; bins];
    for v in values {
        let i = ((v * bins as f64) as usize).min(bins - 1);
        counts[i] += 1;
    }
    let expected = values.len() as f64 / bins as f64;
    let stat: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let dof = (bins - 1) as f64;
    let p = 1.0 - ChiSquared::new(dof).expect("bins >= 2").cdf(stat);
    (stat, p)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_branches_agree_at_switch() {
        let l = 1.18;
        let small = {
            let y = -std::f64::consts::PI.powi(2) / (8.0 * l * l);
            1.0 - (1..=20).map(|k| (((2 * k - 1) as f64).powi(2) * y).exp()).sum::<f64>()
                * (2.0 * std::f64::consts::PI).sqrt()
                / l
        };
        assert!((small - kolmogorov_survival(l)).abs() < 1e-12);
    }

    #[test]
    fn kolmogorov_known_quantiles() {
        // classical critical values: P(K > 1.358) = 0.05, P(K > 1.628) = 0.01
        assert!((kolmogorov_survival(1.3581) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_survival(1.6276) - 0.01).abs() < 1e-3);
        assert!((kolmogorov_survival(0.8276) - 0.5).abs() < 1e-3);
    }

    #[test]
    fn ks_statistic_hand_example() {
        let mut d = vec![0.5, 0.1, 0.9];
        let s = ks_statistic(&mut d, |v| v.clamp(0.0, 1.0));
        // steps at 0.1, 0.5, 0.9: max deviation is 1/3 - 0.1 or 0.9 - 2/3
        assert!((s - (1.0 / 3.0 - 0.1f64).max(0.9 - 2.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
