//! Numerical checks of the tail probability bounds.
//!
//! Each check estimates the probability of a path event over `k` random
//! steps, exactly by walking all `N^k` words when the budget allows and by
//! Monte Carlo otherwise, and compares it with the bound. A bound of 1 or more,
//! or an empty set of admissible start points, is reported as vacuous rather
//! than as satisfied.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::empirical::{class_membership, EmpiricalMeasure};
use crate::chain::{map_replicas, next_symbol};
use crate::error::{check_unit, Error, Result};
use crate::ifs::{
    calibration, enumerate::walk_words, markov_step_atoms, CalibrationConstants, IfsSystem,
};
use crate::plan::{Budget, Estimate, EstimateMode, EvalPlan};
use crate::rng::StreamSpec;

/// Which endpoint a tail statement is about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Near 0.
    Lower,
    /// Near 1.
    Upper,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::Lower => "lower",
            Side::Upper => "upper",
        })
    }
}

impl FromStr for Side {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lower" => Ok(Side::Lower),
            "upper" => Ok(Side::Upper),
            other => Err(Error::Precondition(format!(
                "unknown side {other:?}, expected lower or upper"
            ))),
        }
    }
}

/// Whether the estimate must stay below or above the bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundDirection {
    AtMost,
    AtLeast,
}

/// An estimated probability set against a bound.
///
/// `satisfied` holds when the estimate is on the right side of the bound, with
/// a three standard error allowance for Monte Carlo and none for exact values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub kind: String,
    pub n: u64,
    pub k: u64,
    pub mode: EstimateMode,
    pub estimate: f64,
    pub stderr: f64,
    pub bound: f64,
    pub satisfied: bool,
    pub vacuous: bool,
    pub direction: BoundDirection,
    /// Start point the estimate refers to.
    pub x: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
}

impl BoundCheck {
    #[allow(clippy::too_many_arguments)]
    fn new(
        kind: &str,
        n: u64,
        k: u64,
        est: Estimate,
        bound: f64,
        direction: BoundDirection,
        vacuous: bool,
        x: f64,
        side: Option<Side>,
    ) -> Self {
        let slack = match est.mode {
            EstimateMode::Exact => 0.0,
            EstimateMode::Mc => 3.0 * est.stderr,
        };
        let satisfied = match direction {
            BoundDirection::AtMost => est.value <= bound + slack,
            BoundDirection::AtLeast => est.value >= bound - slack,
        };
        Self {
            kind: kind.to_string(),
            n,
            k,
            mode: est.mode,
            estimate: est.value,
            stderr: est.stderr,
            bound,
            satisfied,
            vacuous,
            direction,
            x,
            side,
        }
    }

    /// `"vacuous"`, `"satisfied"` or `"violated"`.
    pub fn status(&self) -> &'static str {
        if self.vacuous {
            "vacuous"
        } else if self.satisfied {
            "satisfied"
        } else {
            "violated"
        }
    }
}

/// Probability that a path of `depth` steps from every point of `starts`
/// (driven by one shared word) passes `keep` at every step and `accept` at the end.
fn path_event_probability<K, A>(
    system: &IfsSystem,
    plan: &EvalPlan,
    starts: &[f64],
    depth: usize,
    keep: K,
    accept: A,
) -> Result<Estimate>
where
    K: Fn(&[f64]) -> bool + Sync,
    A: Fn(&[f64]) -> bool + Sync,
{
    match plan.resolve(system.len(), depth)? {
        EstimateMode::Exact => {
            if depth == 0 {
                return Ok(Estimate::exact(if accept(starts) { 1.0 } else { 0.0 }));
            }
            let acc = walk_words(
                system,
                starts.to_vec(),
                depth,
                plan.budget,
                1,
                |xs, s| xs.iter().map(|&x| system.step(s, x)).collect::<Vec<f64>>(),
                |d, xs, w, acc| {
                    if !keep(xs) {
                        return false;
                    }
                    if d == depth && accept(xs) {
                        acc[0] += w;
                    }
                    true
                },
            )?;
            Ok(Estimate::exact(acc[0]))
        }
        EstimateMode::Mc => {
            let hits = map_replicas(plan.replicas, |r| {
                let mut gen = StreamSpec::new(plan.seed, r).generator();
                let mut xs = starts.to_vec();
                for _ in 0..depth {
                    let s = next_symbol(system, &mut gen);
                    xs.iter_mut().for_each(|x| *x = system.step(s, *x));
                    if !keep(&xs) {
                        return Ok(0.0);
                    }
                }
                Ok(if accept(&xs) { 1.0 } else { 0.0 })
            })?;
            Ok(Estimate::from_samples(&hits))
        }
    }
}

fn mirror(side: Side, x: f64) -> f64 {
    match side {
        Side::Lower => x,
        Side::Upper => 1.0 - x,
    }
}

/// Probability of staying within `ε` of the chosen endpoint for each of the
/// first `k = ⌊n^(1/4)⌋` steps, against `(1 − δ)^(αk/2)`.
///
/// The bound is claimed for every start at distance in `[ε(1 − δ)^(k/2), ε]`
/// from the endpoint; both ends of that range are evaluated and the larger
/// probability is reported.
pub fn verify_escape_bound(
    system: &IfsSystem,
    consts: &CalibrationConstants,
    n: u64,
    side: Side,
    plan: &EvalPlan,
) -> Result<BoundCheck> {
    let regime = calibration::regime(consts, n)?;
    let eps = consts.epsilon;
    let bound = regime.gamma_n;
    let within = |xs: &[f64]| match side {
        Side::Lower => xs[0] < eps,
        Side::Upper => xs[0] > 1.0 - eps,
    };
    let mut worst: Option<(Estimate, f64)> = None;
    for dist in [eps * regime.eps_n, eps] {
        let x = mirror(side, dist);
        let est = path_event_probability(system, plan, &[x], regime.k as usize, within, |_| true)?;
        if worst.is_none_or(|(w, _)| est.value > w.value) {
            worst = Some((est, x));
        }
    }
    let (est, x) = worst.expect("two start points evaluated");
    Ok(BoundCheck::new(
        "escape",
        n,
        regime.k,
        est,
        bound,
        BoundDirection::AtMost,
        bound >= 1.0,
        x,
        Some(side),
    ))
}

/// Probability that `k` steps from `x` end within `ε_n` of the chosen
/// endpoint, against `2Mγ_n`. Needs `k ≥ ⌊n^(1/4)⌋` and `x` at distance at
/// least `ε_n` from that endpoint.
pub fn verify_boundary_mass(
    system: &IfsSystem,
    consts: &CalibrationConstants,
    n: u64,
    k: u64,
    x: f64,
    side: Side,
    plan: &EvalPlan,
) -> Result<BoundCheck> {
    check_unit("x", x)?;
    let regime = calibration::regime(consts, n)?;
    if k < regime.k {
        return Err(Error::Precondition(format!(
            "k = {k} is below ⌊n^(1/4)⌋ = {}",
            regime.k
        )));
    }
    let eps_n = regime.eps_n;
    if mirror(side, x) < eps_n {
        return Err(Error::Precondition(format!(
            "start {x} is within ε_n = {eps_n} of the {side} endpoint"
        )));
    }
    let bound = 2.0 * consts.m * regime.gamma_n;
    let est = path_event_probability(
        system,
        plan,
        &[x],
        k as usize,
        |_| true,
        |xs| mirror(side, xs[0]) < eps_n,
    )?;
    Ok(BoundCheck::new(
        "boundary_mass",
        n,
        k,
        est,
        bound,
        BoundDirection::AtMost,
        bound >= 1.0,
        x,
        Some(side),
    ))
}

/// Probability that `k = ⌊n^(1/4)⌋` steps carry all of `[ε_n, 1 − ε_n]` into
/// `J = [a, 1 − a]`, against the lower bound 1/5. Needs `M < a^(−α)/6`.
///
/// Maps are increasing, so the image of the interval lies between the images
/// of its endpoints and only those two points are followed. When `ε_n ≥ ½`
/// the start interval is empty and the check is vacuous.
pub fn verify_return_probability(
    system: &IfsSystem,
    consts: &CalibrationConstants,
    a: f64,
    n: u64,
    plan: &EvalPlan,
) -> Result<BoundCheck> {
    if !(a > 0.0 && a < 0.5) {
        return Err(Error::Domain {
            what: "a",
            value: a,
            domain: "(0, 1/2)",
        });
    }
    let limit = a.powf(-consts.alpha) / 6.0;
    if consts.m >= limit {
        return Err(Error::Precondition(format!(
            "M = {} must be below a^(-α)/6 = {limit}",
            consts.m
        )));
    }
    let regime = calibration::regime(consts, n)?;
    let bound = 0.2;
    let eps_n = regime.eps_n;
    if eps_n >= 0.5 {
        return Ok(BoundCheck::new(
            "return",
            n,
            regime.k,
            Estimate::exact(1.0),
            bound,
            BoundDirection::AtLeast,
            true,
            eps_n,
            None,
        ));
    }
    let est = path_event_probability(
        system,
        plan,
        &[eps_n, 1.0 - eps_n],
        regime.k as usize,
        |_| true,
        |xs| xs[0] >= a && xs[1] <= 1.0 - a,
    )?;
    Ok(BoundCheck::new(
        "return",
        n,
        regime.k,
        est,
        bound,
        BoundDirection::AtLeast,
        false,
        eps_n,
        None,
    ))
}

/// Outcome of pushing a class member forward step by step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassInvarianceReport {
    pub steps: usize,
    /// Atom count after the last step.
    pub atoms: usize,
    /// Steps after which membership failed.
    pub violations: Vec<usize>,
}

impl ClassInvarianceReport {
    pub fn held(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Applies the exact pushforward `steps` times to a member of the tail class
/// and re-checks membership after every step.
pub fn class_invariance_test(
    system: &IfsSystem,
    consts: &CalibrationConstants,
    mu: &EmpiricalMeasure,
    steps: usize,
    budget: Budget,
) -> Result<ClassInvarianceReport> {
    budget.check(system.len(), steps)?;
    if !class_membership(mu, consts.m, consts.alpha).member() {
        return Err(Error::Precondition(
            "starting measure is not in the tail class".into(),
        ));
    }
    let mut current = mu.clone();
    let mut violations = Vec::new();
    for step in 1..=steps {
        current = markov_step_atoms(system, &current);
        if !class_membership(&current, consts.m, consts.alpha).member() {
            violations.push(step);
        }
    }
    Ok(ClassInvarianceReport {
        steps,
        atoms: current.len(),
        violations,
    })
}
