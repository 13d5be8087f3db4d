use serde::{Deserialize, Serialize};

use super::map::IntervalMap;
use super::system::IfsSystem;

pub const DEFAULT_GRID_POINTS: usize = 10_001;

/// Outcome of checking the crossing and positive-Lyapunov conditions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdmissibilityReport {
    /// Every interior point has one map strictly below and one strictly above the diagonal.
    pub crossing_ok: bool,
    /// Interior point with the smallest crossing margin among those checked.
    pub worst_point: f64,
    /// `min(x - min_i f_i(x), max_j f_j(x) - x)` at `worst_point`.
    pub worst_margin: f64,
    pub points_checked: usize,
    /// `Σ p_i ln f_i'(0)`, in nats.
    pub lyap0: f64,
    /// `Σ p_i ln f_i'(1)`, in nats.
    pub lyap1: f64,
    pub endpoint_slopes_positive: bool,
    pub probs_positive: bool,
    pub admissible: bool,
}

fn margin(system: &IfsSystem, x: f64) -> f64 {
    let (lo, hi) = system
        .maps()
        .iter()
        .map(|m| m.apply(x))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| {
            (lo.min(y), hi.max(y))
        });
    (x - lo).min(hi - x)
}

/// Checks admissibility.
///
/// The crossing condition is tested at `grid_points` equally spaced interior
/// points, at every interior breakpoint, and at every point where two maps
/// cross inside a common linear piece. Between consecutive breakpoints
/// `min_i f_i - id` is concave and `max_j f_j - id` convex, so their extrema
/// sit at those candidates and the check is exact. On the pieces touching 0
/// and 1 all maps are linear through the fixed point, and the condition
/// reduces to comparing endpoint slopes with 1.
pub fn check_admissible(system: &IfsSystem, grid_points: usize) -> AdmissibilityReport {
    let mut knots: Vec<f64> = vec![0.0, 1.0];
    for map in system.maps() {
        knots.extend_from_slice(map.interior_breakpoints());
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup();

    let mut candidates: Vec<f64> = knots[1..knots.len() - 1].to_vec();
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let mid = 0.5 * (a + b);
        // Each map is affine on [a, b]; intersect every pair of pieces.
        let lines: Vec<(f64, f64)> = system
            .maps()
            .iter()
            .map(|m| {
                let slope = (m.apply(b) - m.apply(a)) / (b - a);
                (slope, m.apply(mid) - slope * mid)
            })
            .collect();
        for (i, &(s1, c1)) in lines.iter().enumerate() {
            for &(s2, c2) in &lines[i + 1..] {
                if s1 != s2 {
                    let x = (c2 - c1) / (s1 - s2);
                    if x > a && x < b {
                        candidates.push(x);
                    }
                }
            }
        }
    }
    candidates.extend((1..=grid_points).map(|k| k as f64 / (grid_points + 1) as f64));

    let mut worst_point = f64::NAN;
    let mut worst_margin = f64::INFINITY;
    for &x in &candidates {
        let m = margin(system, x);
        if m < worst_margin {
            worst_margin = m;
            worst_point = x;
        }
    }

    let slopes: Vec<(f64, f64)> = system.maps().iter().map(|m| m.endpoint_slopes()).collect();
    let straddles = |values: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s), hi.max(s))
        });
        lo < 1.0 && hi > 1.0
    };
    let near_zero_ok = straddles(&mut slopes.iter().map(|s| s.0));
    let near_one_ok = straddles(&mut slopes.iter().map(|s| s.1));
    if (!near_zero_ok || !near_one_ok) && worst_margin > 0.0 {
        // Fails only in an endpoint neighbourhood; report that endpoint.
        worst_margin = 0.0;
        worst_point = if near_zero_ok { 1.0 } else { 0.0 };
    }
    let crossing_ok = near_zero_ok && near_one_ok && worst_margin > 0.0;

    let probs = system.probs();
    let lyap0 = probs
        .iter()
        .zip(&slopes)
        .map(|(p, s)| p * s.0.ln())
        .sum::<f64>();
    let lyap1 = probs
        .iter()
        .zip(&slopes)
        .map(|(p, s)| p * s.1.ln())
        .sum::<f64>();
    let endpoint_slopes_positive = slopes.iter().all(|&(a, b)| a > 0.0 && b > 0.0);
    let probs_positive = probs.iter().all(|&p| p > 0.0);

    AdmissibilityReport {
        crossing_ok,
        worst_point,
        worst_margin,
        points_checked: candidates.len(),
        lyap0,
        lyap1,
        endpoint_slopes_positive,
        probs_positive,
        admissible: crossing_ok
            && lyap0 > 0.0
            && lyap1 > 0.0
            && endpoint_slopes_positive
            && probs_positive,
    }
}
