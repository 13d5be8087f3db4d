//! Tail constants `(α, ε, δ, M)` for an admissible system and the
//! horizon-dependent quantities derived from them.
//!
//! With `λ̲_i`, `λ̄_i` the endpoint slopes, the constants satisfy, for all
//! `x ≤ ε`:
//!
//! ```text
//! f_i(x) ≥ λ̲_i x            1 − f_i(1 − x) ≥ λ̄_i x
//! f_i⁻¹(x) ≤ x / λ̲_i        f_i⁻¹(1 − x) ≥ 1 − x / λ̄_i
//! Σ p_i λ̲_i^(−α) < (1 − δ)^α,  Σ p_i λ̄_i^(−α) < (1 − δ)^α,  M = ε^(−α)
//! ```

use serde::{Deserialize, Serialize};

use super::admissibility::check_admissible;
use super::map::{IntervalMap, PiecewiseLinearMap};
use super::system::IfsSystem;
use crate::error::{Error, Result};

/// ε is shrunk by this factor below the largest radius where the linear
/// bounds hold.
pub const EPSILON_MARGIN: f64 = 0.999;
/// δ is shrunk by this factor below its supremum.
pub const DELTA_MARGIN: f64 = 0.99;

const GEOMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConstants {
    pub alpha: f64,
    /// Per-map slope at 0.
    pub lambda_lo: Vec<f64>,
    /// Per-map slope at 1.
    pub lambda_hi: Vec<f64>,
    /// Largest radius (capped at 1/2) on which the linear bounds hold.
    pub epsilon_max: f64,
    pub epsilon: f64,
    /// `Σ p_i λ̲_i^(−α)`.
    pub moment_lo: f64,
    /// `Σ p_i λ̄_i^(−α)`.
    pub moment_hi: f64,
    /// `1 − max(moment_lo, moment_hi)^(1/α)`, the supremum of admissible δ.
    pub delta_max: f64,
    pub delta: f64,
    /// Tail constant `ε^(−α)`.
    #[serde(rename = "M")]
    pub m: f64,
}

/// Horizon-dependent quantities for a given `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRegime {
    pub n: u64,
    /// `⌊n^(1/4)⌋`.
    pub k: u64,
    /// `(1 − δ)^(k/2)`.
    pub eps_n: f64,
    /// `(1 − δ)^(αk/2)`.
    pub gamma_n: f64,
}

/// Largest `t ≤ 1` with `sign · (map(x) − c·x) ≥ 0` on `[0, t]`.
///
/// `map − c·id` is piecewise linear, so it suffices to walk the nodes and stop
/// at the first sign change.
fn linear_bound_radius(map: &PiecewiseLinearMap, c: f64, sign: f64) -> f64 {
    let h = |x: f64, y: f64| {
        let v = sign * (y - c * x);
        if v.abs() <= GEOMETRY_TOL {
            0.0
        } else {
            v
        }
    };
    let mut prev = (0.0, 0.0);
    for (x, y) in map.nodes().skip(1) {
        let (h0, h1) = (h(prev.0, prev.1), h(x, y));
        if h1 < 0.0 {
            return prev.0 + h0 / (h0 - h1) * (x - prev.0);
        }
        prev = (x, y);
    }
    1.0
}

/// Largest `ε ≤ 1/2` on which all four linear bounds hold for every map.
pub fn linearization_radius(system: &IfsSystem) -> f64 {
    system
        .maps()
        .iter()
        .map(|map| {
            let (lo, hi) = map.endpoint_slopes();
            let reflected = map.reflected();
            [
                linear_bound_radius(map, lo, 1.0),
                linear_bound_radius(&map.inverted(), 1.0 / lo, -1.0),
                linear_bound_radius(&reflected, hi, 1.0),
                linear_bound_radius(&reflected.inverted(), 1.0 / hi, -1.0),
            ]
            .into_iter()
            .fold(f64::INFINITY, f64::min)
        })
        .fold(0.5, f64::min)
}

fn moment(probs: &[f64], lambdas: &[f64], alpha: f64) -> f64 {
    probs
        .iter()
        .zip(lambdas)
        .map(|(p, l)| p * l.powf(-alpha))
        .sum()
}

/// Calibrates the tail constants for exponent `alpha ∈ (0, 1)`.
pub fn calibrate(system: &IfsSystem, alpha: f64) -> Result<CalibrationConstants> {
    crate::error::check_open_unit("alpha", alpha)?;
    let report = check_admissible(system, 0);
    if !report.admissible {
        return Err(Error::Precondition(format!(
            "system is not admissible (crossing_ok = {}, lyap0 = {}, lyap1 = {})",
            report.crossing_ok, report.lyap0, report.lyap1
        )));
    }

    let (lambda_lo, lambda_hi): (Vec<f64>, Vec<f64>) =
        system.maps().iter().map(|m| m.endpoint_slopes()).unzip();
    let moment_lo = moment(system.probs(), &lambda_lo, alpha);
    let moment_hi = moment(system.probs(), &lambda_hi, alpha);
    for (label, s) in [("lo", moment_lo), ("hi", moment_hi)] {
        if s >= 1.0 {
            return Err(Error::CalibrationInfeasible(format!(
                "Σ p_i λ_{label}^(-α) = {s} ≥ 1 at α = {alpha}, so no δ > 0 satisfies Σ p_i λ_{label}^(-α) < (1-δ)^α; try a smaller α"
            )));
        }
    }
    let delta_max = 1.0 - moment_lo.max(moment_hi).powf(1.0 / alpha);
    let delta = DELTA_MARGIN * delta_max;

    let epsilon_max = linearization_radius(system);
    let epsilon = EPSILON_MARGIN * epsilon_max;
    let m = tail_constant(epsilon, alpha);

    Ok(CalibrationConstants {
        alpha,
        lambda_lo,
        lambda_hi,
        epsilon_max,
        epsilon,
        moment_lo,
        moment_hi,
        delta_max,
        delta,
        m,
    })
}

/// `ε^(−α)`, nudged by ulps so that `M · ε^α` evaluates to at least 1.
pub fn tail_constant(epsilon: f64, alpha: f64) -> f64 {
    let scale = epsilon.powf(alpha);
    let mut m = epsilon.powf(-alpha);
    for _ in 0..8 {
        let p = m * scale;
        if p == 1.0 {
            break;
        }
        m = if p < 1.0 { next_up(m) } else { next_down(m) };
    }
    if m * scale < 1.0 {
        m = next_up(m);
    }
    m
}

fn next_up(x: f64) -> f64 {
    f64::from_bits(x.to_bits() + 1)
}

fn next_down(x: f64) -> f64 {
    f64::from_bits(x.to_bits() - 1)
}

/// `⌊n^(1/4)⌋` in exact integer arithmetic.
pub fn fourth_root_floor(n: u64) -> u64 {
    let mut k = (n as f64).powf(0.25) as u64;
    let pow4 = |k: u64| k.checked_pow(4);
    while pow4(k + 1).is_some_and(|p| p <= n) {
        k += 1;
    }
    while pow4(k).is_none_or(|p| p > n) {
        k -= 1;
    }
    k
}

/// `⌊n^(1/8)⌋` in exact integer arithmetic.
pub fn eighth_root_floor(n: u64) -> u64 {
    // ⌊⌊n^(1/4)⌋^(1/2)⌋ = ⌊n^(1/8)⌋.
    let k = fourth_root_floor(n);
    let mut r = (k as f64).sqrt() as u64;
    while (r + 1) * (r + 1) <= k {
        r += 1;
    }
    while r * r > k {
        r -= 1;
    }
    r
}

/// Horizon quantities for `n ≥ 1`.
pub fn regime(consts: &CalibrationConstants, n: u64) -> Result<BoundRegime> {
    regime_from(consts.alpha, consts.delta, n)
}

pub fn regime_from(alpha: f64, delta: f64, n: u64) -> Result<BoundRegime> {
    if n == 0 {
        return Err(Error::Precondition("regime needs n ≥ 1".into()));
    }
    let k = fourth_root_floor(n);
    let base = 1.0 - delta;
    Ok(BoundRegime {
        n,
        k,
        eps_n: base.powf(k as f64 / 2.0),
        gamma_n: base.powf(alpha * k as f64 / 2.0),
    })
}

/// One row of an α sweep: the best δ available at that α, if any.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaSweepRow {
    pub alpha: f64,
    pub delta_max: Option<f64>,
}

/// Evaluates `δ_max(α)` over a grid of exponents.
pub fn sweep_alpha(system: &IfsSystem, alphas: &[f64]) -> Result<Vec<AlphaSweepRow>> {
    alphas
        .iter()
        .map(|&alpha| match calibrate(system, alpha) {
            Ok(c) => Ok(AlphaSweepRow {
                alpha,
                delta_max: Some(c.delta_max),
            }),
            Err(Error::CalibrationInfeasible(_)) => Ok(AlphaSweepRow {
                alpha,
                delta_max: None,
            }),
            Err(e) => Err(e),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn am2_closed_forms() {
        let am2 = IfsSystem::am2();
        let c = calibrate(&am2, 0.5).unwrap();
        let expected = 1.0 - (0.5 * (2f64.sqrt() + 3f64.powf(-0.5))).powi(2);
        assert!((c.delta_max - expected).abs() < 1e-12);
        assert!((c.delta_max - 0.00842).abs() < 1e-5);
        assert!((c.epsilon_max - 0.2).abs() < 1e-12);
        assert!((c.m - 5f64.sqrt()).abs() < 0.003);
        assert!(c.m * c.epsilon.powf(c.alpha) >= 1.0);

        let c = calibrate(&am2, 0.1).unwrap();
        let expected = 1.0 - (0.5 * (2f64.powf(0.1) + 3f64.powf(-0.1))).powi(10);
        assert!((c.delta_max - expected).abs() < 1e-12);
        assert!((c.delta_max - 0.1501).abs() < 1e-4);
    }

    #[test]
    fn large_alpha_is_infeasible() {
        let err = calibrate(&IfsSystem::am2(), 0.99).unwrap_err();
        match err {
            Error::CalibrationInfeasible(msg) => assert!(msg.contains("≥ 1"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_alpha_and_inadmissible_systems() {
        assert!(calibrate(&IfsSystem::am2(), 0.0).is_err());
        assert!(calibrate(&IfsSystem::am2(), 1.0).is_err());
        let skewed = IfsSystem::am2_with_probs(0.9, 0.1).unwrap();
        assert!(matches!(
            calibrate(&skewed, 0.1),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn regime_examples() {
        let r = regime_from(0.1, 0.15, 1).unwrap();
        assert_eq!(r.k, 1);
        assert!((r.eps_n - 0.85f64.sqrt()).abs() < 1e-15);
        assert!((r.eps_n - 0.92195).abs() < 1e-5);

        let r = regime_from(0.1, 0.15, 6561).unwrap();
        assert_eq!(r.k, 9);
        assert!((r.eps_n - 0.85f64.powf(4.5)).abs() < 1e-15);
        assert!((r.eps_n - 0.4813).abs() < 1e-4);

        let r = regime_from(0.1, 0.0, 16).unwrap();
        assert_eq!(r.eps_n, 1.0);
        assert_eq!(r.gamma_n, 1.0);

        assert!(regime_from(0.1, 0.15, 0).is_err());
    }

    #[test]
    fn integer_roots() {
        for k in 1u64..200 {
            let p = k.pow(4);
            assert_eq!(fourth_root_floor(p), k);
            assert_eq!(fourth_root_floor(p - 1), k - 1);
        }
        assert_eq!(fourth_root_floor(u64::MAX), 65535);
        assert_eq!(eighth_root_floor(255), 1);
        assert_eq!(eighth_root_floor(256), 2);
        assert_eq!(eighth_root_floor(6560), 2);
        assert_eq!(eighth_root_floor(6561), 3);
    }

    #[test]
    fn eps_n_nonincreasing_in_n() {
        let mut prev = f64::INFINITY;
        for n in 1..50_000u64 {
            let r = regime_from(0.3, 0.05, n).unwrap();
            assert!(r.eps_n <= prev);
            assert!(r.eps_n > 0.0 && r.eps_n <= 1.0 && r.gamma_n > 0.0 && r.gamma_n <= 1.0);
            prev = r.eps_n;
        }
    }

    #[test]
    fn sweep_reports_infeasible_exponents() {
        let rows = sweep_alpha(&IfsSystem::am2(), &[0.1, 0.5, 0.99]).unwrap();
        assert!(rows[0].delta_max.unwrap() > rows[1].delta_max.unwrap());
        assert!(rows[2].delta_max.is_none());
    }
}
