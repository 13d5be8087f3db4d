//! Kolmogorov–Smirnov tests against a centered normal law and between two samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `P(Z ≤ x)` for `Z ~ N(0, 1)`, accurate in both tails.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Statistic and asymptotic p-value of a Kolmogorov–Smirnov test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Effective sample size `n` (one sample) or `nm/(n+m)` (two samples).
    pub effective_n: f64,
}

/// Kolmogorov survival function `Q(λ) = P(K > λ)`.
///
/// Uses the alternating series `2 Σ (−1)^(j−1) e^(−2j²λ²)` for `λ ≥ 1`, and
/// the equivalent theta-function form
/// `1 − (√(2π)/λ) Σ_{j odd} e^(−j²π²/(8λ²))` below, where the series would
/// converge slowly. Both are summed over at least 10 terms.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let p = if lambda < 1.0 {
        let c = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
        let sum: f64 = (0..10)
            .map(|i| ((2 * i + 1) as f64).powi(2) * c)
            .map(f64::exp)
            .sum();
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * sum
    } else {
        let sum: f64 = (1..=20)
            .map(|j| {
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (j * j) as f64 * lambda * lambda).exp()
            })
            .sum();
        2.0 * sum
    };
    p.clamp(0.0, 1.0)
}

/// One-sample test of `samples` against `N(0, σ²)`.
pub fn ks_statistic(samples: &[f64], sigma: f64) -> Result<KsResult> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Domain {
            what: "sigma",
            value: sigma,
            domain: "(0, ∞)",
        });
    }
    if samples.is_empty() {
        return Err(Error::Precondition(
            "KS test needs at least one sample".into(),
        ));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let d = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal_cdf(x / sigma);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max);
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_survival(n.sqrt() * d),
        effective_n: n,
    })
}

/// Two-sample test: `sup |F_a − F_b|` over the pooled sample.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<KsResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Precondition(
            "KS test needs two non-empty samples".into(),
        ));
    }
    let sort = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(f64::total_cmp);
        s
    };
    let (a, b) = (sort(a), sort(b));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    let en = na * nb / (na + nb);
    Ok(KsResult {
        statistic: d,
        p_value: kolmogorov_survival(en.sqrt() * d),
        effective_n: en,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    #[test]
    fn normal_cdf_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(1.959963984540054) - 0.975).abs() < 1e-15);
        assert!((normal_cdf(-8.0) - 6.22096057427178e-16).abs() < 1e-28);
    }

    #[test]
    fn survival_branches_agree() {
        // Both forms are valid everywhere; compare them where each converges fast.
        for lambda in [0.8, 0.9, 1.0, 1.1, 1.3] {
            let theta = {
                let c = -std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda);
                let s: f64 = (0..40)
                    .map(|i| (((2 * i + 1) as f64).powi(2) * c).exp())
                    .sum();
                1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s
            };
            let series: f64 = 2.0
                * (1..=60)
                    .map(|j| {
                        (if j % 2 == 1 { 1.0 } else { -1.0 })
                            * (-2.0 * (j * j) as f64 * lambda * lambda).exp()
                    })
                    .sum::<f64>();
            assert!((theta - series).abs() < 1e-12);
            assert!((kolmogorov_survival(lambda) - series).abs() < 1e-12);
        }
        assert!((kolmogorov_survival(1.3580986393225507) - 0.05).abs() < 1e-9);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
        assert!(kolmogorov_survival(0.2) > 0.999_999);
    }

    #[test]
    fn quantile_samples_give_half_step() {
        let std = Normal::new(0.0, 2.0).unwrap();
        let r = 1000;
        // One Newton step polishes the library quantile against the CDF under test.
        let xs: Vec<f64> = (1..=r)
            .map(|i| {
                let p = (i as f64 - 0.5) / r as f64;
                let q = std.inverse_cdf(p);
                q - (normal_cdf(q / 2.0) - p) / statrs::distribution::Continuous::pdf(&std, q)
            })
            .collect();
        let ks = ks_statistic(&xs, 2.0).unwrap();
        assert!((ks.statistic - 0.5 / r as f64).abs() < 1e-15);
    }

    #[test]
    fn zeros_against_unit_normal() {
        assert_eq!(ks_statistic(&[0.0; 50], 1.0).unwrap().statistic, 0.5);
        assert!(ks_statistic(&[0.0], 0.0).is_err());
    }

    #[test]
    fn scale_invariance() {
        let xs = [-1.3, 0.2, 0.7, 2.1, -0.4, 0.05];
        let a = ks_statistic(&xs, 1.5).unwrap();
        let scaled: Vec<f64> = xs.iter().map(|x| x * 4.0).collect();
        let b = ks_statistic(&scaled, 6.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn two_sample_examples() {
        let a = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(ks_two_sample(&a, &a).unwrap().statistic, 0.0);
        assert_eq!(ks_two_sample(&a, &[1.0, 2.0]).unwrap().statistic, 1.0);
        let d = ks_two_sample(&[0.0, 1.0], &[0.5]).unwrap().statistic;
        assert_eq!(d, 0.5);
    }
}
