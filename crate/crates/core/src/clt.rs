//! Central limit behaviour of Birkhoff sums.
//!
//! Sums exclude the start term: `S_n = φ(X_1) + ⋯ + φ(X_n)`, and every
//! sample is `S_n/√n` of the centered observable `φ − m̂`.

use serde::{Deserialize, Serialize};

use crate::chain::{check_state, map_replicas, next_symbol, Starts};
use crate::error::{check_unit, Error, Result};
use crate::ifs::{dual_ladder_exact, walk_words, IfsSystem};
use crate::ks::{ks_statistic, KsResult};
use crate::plan::{Budget, Estimate, EstimateMode, EvalPlan};
use crate::rng::StreamSpec;
use crate::stats::{least_squares, mean_var};

/// How the observable is centered against the invariant measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// `⟨μ*, φ⟩` is known, e.g. from a symmetry.
    Known(f64),
    /// Estimate `⟨μ*, φ⟩` from the terminal states of `replicas` trajectories
    /// of `n_burn` steps from ½.
    BurnIn {
        n_burn: usize,
        replicas: usize,
        seed: u64,
    },
}

impl Default for Centering {
    fn default() -> Self {
        Centering::BurnIn {
            n_burn: 10_000,
            replicas: 100_000,
            seed: 0x00C3_E7E2,
        }
    }
}

/// `⟨μ̂*, φ⟩` with its standard error.
pub fn centering_estimate<F>(system: &IfsSystem, phi: F, centering: Centering) -> Result<Estimate>
where
    F: Fn(f64) -> f64 + Sync,
{
    match centering {
        Centering::Known(m) => Ok(Estimate::exact(m)),
        Centering::BurnIn {
            n_burn,
            replicas,
            seed,
        } => {
            if replicas < 2 {
                return Err(Error::Precondition(
                    "centering needs at least 2 replicas".into(),
                ));
            }
            let values = map_replicas(replicas, |r| {
                let mut gen = StreamSpec::new(seed, r).generator();
                let x = crate::chain::terminal_state(system, 0.5, n_burn, &mut gen)?;
                Ok(phi(x))
            })?;
            Ok(Estimate::from_samples(&values))
        }
    }
}

#[inline]
fn centered_sum<F: Fn(f64) -> f64>(
    system: &IfsSystem,
    phi: &F,
    mean: f64,
    x0: f64,
    n: usize,
    gen: &mut crate::rng::SplitMix64,
) -> Result<f64> {
    let mut x = x0;
    let mut sum = 0.0;
    for _ in 0..n {
        x = system.step(next_symbol(system, gen), x);
        sum += phi(x) - mean;
    }
    check_state(x)?;
    Ok(sum)
}

/// `R` samples of `S_n/√n` for `φ − mean`; replica `r` uses stream `(seed, r)`.
pub fn normalized_sums<F>(
    system: &IfsSystem,
    phi: F,
    mean: f64,
    start: &Starts,
    n: usize,
    replicas: usize,
    seed: u64,
) -> Result<Vec<f64>>
where
    F: Fn(f64) -> f64 + Sync,
{
    start.validate()?;
    if n == 0 {
        return Err(Error::Precondition("normalized sums need n ≥ 1".into()));
    }
    let scale = 1.0 / (n as f64).sqrt();
    map_replicas(replicas, |r| {
        let x0 = start.start(system, r)?;
        let mut gen = StreamSpec::new(seed, r).generator();
        Ok(centered_sum(system, &phi, mean, x0, n, &mut gen)? * scale)
    })
}

/// Exact law of `S_n/√n` from `x`: one `(value, probability)` per word, in
/// word order.
pub fn normalized_sum_atoms<F>(
    system: &IfsSystem,
    phi: F,
    mean: f64,
    x: f64,
    n: usize,
    budget: Budget,
) -> Result<Vec<(f64, f64)>>
where
    F: Fn(f64) -> f64 + Sync,
{
    check_unit("x", x)?;
    if n == 0 {
        return Err(Error::Precondition("normalized sums need n ≥ 1".into()));
    }
    budget.check(system.len(), n)?;
    let scale = 1.0 / (n as f64).sqrt();
    let mut atoms = Vec::new();
    collect_sums(system, &phi, mean, n, x, 0.0, 1.0, scale, &mut atoms);
    Ok(atoms)
}

#[allow(clippy::too_many_arguments)]
fn collect_sums<F: Fn(f64) -> f64>(
    system: &IfsSystem,
    phi: &F,
    mean: f64,
    left: usize,
    x: f64,
    sum: f64,
    weight: f64,
    scale: f64,
    out: &mut Vec<(f64, f64)>,
) {
    if left == 0 {
        out.push((sum * scale, weight));
        return;
    }
    for (s, &p) in system.probs().iter().enumerate() {
        if p > 0.0 {
            let y = system.step(s, x);
            collect_sums(
                system,
                phi,
                mean,
                left - 1,
                y,
                sum + phi(y) - mean,
                weight * p,
                scale,
                out,
            );
        }
    }
}

/// Second moment about 0 of the samples, with its jackknife standard error.
///
/// For a mean the leave-one-out jackknife reduces to `sd(s²)/√R`, which is
/// what is computed.
pub fn estimate_sigma2(samples: &[f64]) -> Result<Estimate> {
    if samples.len() < 30 {
        return Err(Error::Precondition(format!(
            "variance estimate needs at least 30 samples, got {}",
            samples.len()
        )));
    }
    let squares: Vec<f64> = samples.iter().map(|s| s * s).collect();
    Ok(Estimate::from_samples(&squares))
}

/// Summary of one normalized-sum experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub n: usize,
    pub replicas: usize,
    pub start: Starts,
    pub seed: u64,
    /// `⟨μ̂*, φ⟩` subtracted from φ.
    pub centering: Estimate,
    pub sigma2: Estimate,
    pub sample_mean: Estimate,
    /// Against `N(0, σ̂²)`; absent when `σ̂² = 0`.
    pub ks: Option<KsResult>,
    pub notes: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub char_table_file: Option<String>,
}

/// Runs [`normalized_sums`], estimates `σ²` and tests normality against the
/// plug-in `N(0, σ̂²)`. Returns the samples alongside the report.
pub fn clt_report<F>(
    system: &IfsSystem,
    phi: F,
    centering: Centering,
    start: &Starts,
    n: usize,
    replicas: usize,
    seed: u64,
) -> Result<(CltReport, Vec<f64>)>
where
    F: Fn(f64) -> f64 + Sync,
{
    let center = centering_estimate(system, &phi, centering)?;
    let samples = normalized_sums(system, &phi, center.value, start, n, replicas, seed)?;
    let sigma2 = estimate_sigma2(&samples)?;
    let mut notes = Vec::new();
    let ks = if sigma2.value > 0.0 {
        notes.push("KS p-value is approximate: σ is estimated from the same samples".into());
        Some(ks_statistic(&samples, sigma2.value.sqrt())?)
    } else {
        notes.push("σ̂² = 0: sums do not spread, consistent with a coboundary; KS skipped".into());
        None
    };
    if center.mode == EstimateMode::Mc {
        notes.push(format!(
            "centering estimated by burn-in: {} ± {}",
            center.value, center.stderr
        ));
    }
    let report = CltReport {
        n,
        replicas,
        start: start.clone(),
        seed,
        centering: center,
        sample_mean: Estimate::from_samples(&samples),
        sigma2,
        ks,
        notes,
        samples_file: None,
        char_table_file: None,
    };
    Ok((report, samples))
}

/// One row of a Maxwell–Woodroofe growth table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthRow {
    pub n: u64,
    /// `‖Σ_{j=1..n} U^j φ‖` in `L²` of the reference sample.
    pub norm: f64,
    pub stderr: f64,
    pub mode: EstimateMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub rows: Vec<GrowthRow>,
    /// Least-squares slope of `ln norm` against `ln n`.
    pub exponent: Option<f64>,
    /// Grouped jackknife over reference points.
    pub exponent_stderr: Option<f64>,
    pub y_samples: usize,
    pub inner_replicas: usize,
}

/// Number of jackknife groups used for growth standard errors.
pub const JACKKNIFE_GROUPS: usize = 20;

/// Growth of `‖Σ_{j≤n} U^j φ‖_{L²(μ̂*)}` along `n_list`.
///
/// For each reference point `y` the partial sums `T_n(y) = Σ_{j≤n} U^j φ(y)`
/// are computed exactly when every `n` fits the budget (and the plan allows
/// it), otherwise by `inner_replicas` trajectories from `y` on streams
/// `(seed, y_index·2³² + inner)`. The squared Monte Carlo mean is bias
/// corrected by subtracting its sampling variance.
pub fn mw_growth<F>(
    system: &IfsSystem,
    phi: F,
    n_list: &[usize],
    y_samples: &[f64],
    inner_replicas: usize,
    plan: &EvalPlan,
) -> Result<GrowthReport>
where
    F: Fn(f64) -> f64 + Sync,
{
    if n_list.is_empty() || n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
        return Err(Error::Precondition(
            "n_list must be positive and strictly increasing".into(),
        ));
    }
    if y_samples.is_empty() {
        return Err(Error::Precondition("no reference points".into()));
    }
    y_samples.iter().try_for_each(|&y| check_unit("y", y))?;
    let n_max = *n_list.last().expect("non-empty");
    let mode = EvalPlan {
        replicas: inner_replicas,
        ..*plan
    }
    .resolve(system.len(), n_max)?;
    if y_samples.len() > u32::MAX as usize || inner_replicas > u32::MAX as usize {
        return Err(Error::Precondition(
            "too many replicas for nested stream indices".into(),
        ));
    }

    // Per y: unbiased estimates of T_n(y)² for every n in the list.
    let squares: Vec<Vec<f64>> = map_replicas(y_samples.len(), |o| {
        let y = y_samples[o as usize];
        match mode {
            EstimateMode::Exact => {
                let ladder = dual_ladder_exact(system, &phi, n_max, y, plan.budget)?;
                let mut cum = 0.0;
                let partial: Vec<f64> = ladder
                    .iter()
                    .map(|v| {
                        cum += v;
                        cum
                    })
                    .collect();
                Ok(n_list
                    .iter()
                    .map(|&n| partial[n - 1] * partial[n - 1])
                    .collect())
            }
            EstimateMode::Mc => {
                let mut sums = vec![vec![0.0; inner_replicas]; n_list.len()];
                #[allow(clippy::needless_range_loop)] // `i` also names the stream.
                for i in 0..inner_replicas {
                    let mut gen = StreamSpec::nested(plan.seed, o as u32, i as u32).generator();
                    let (mut x, mut s, mut next) = (y, 0.0, 0);
                    for step in 1..=n_max {
                        x = system.step(next_symbol(system, &mut gen), x);
                        s += phi(x);
                        if step == n_list[next] {
                            sums[next][i] = s;
                            next += 1;
                        }
                    }
                    check_state(x)?;
                }
                Ok(sums
                    .iter()
                    .map(|col| {
                        let (m, v) = mean_var(col);
                        m * m - v / inner_replicas as f64
                    })
                    .collect())
            }
        }
    })?;

    let norms_over = |rows: &mut dyn Iterator<Item = &Vec<f64>>| -> Vec<f64> {
        let mut acc = vec![0.0; n_list.len()];
        let mut count = 0usize;
        for row in rows {
            for (a, v) in acc.iter_mut().zip(row) {
                *a += v;
            }
            count += 1;
        }
        acc.iter()
            .map(|a| (a / count as f64).max(0.0).sqrt())
            .collect()
    };
    let exponent_of = |norms: &[f64]| {
        if norms.len() < 2 || norms.iter().any(|&v| v <= 0.0) {
            return None;
        }
        let ln_n: Vec<f64> = n_list.iter().map(|&n| (n as f64).ln()).collect();
        let ln_v: Vec<f64> = norms.iter().map(|v| v.ln()).collect();
        least_squares(&ln_n, &ln_v).map(|f| f.slope)
    };

    let norms = norms_over(&mut squares.iter());
    let exponent = exponent_of(&norms);

    // Grouped jackknife: drop one contiguous block of reference points at a time.
    let groups = JACKKNIFE_GROUPS.min(y_samples.len());
    let (mut norm_reps, mut exp_reps) = (Vec::new(), Vec::new());
    if groups >= 2 {
        for g in 0..groups {
            let (lo, hi) = (g * squares.len() / groups, (g + 1) * squares.len() / groups);
            let reps = norms_over(&mut squares[..lo].iter().chain(&squares[hi..]));
            exp_reps.push(exponent_of(&reps));
            norm_reps.push(reps);
        }
    }
    let jackknife = |values: &[f64]| {
        let g = values.len() as f64;
        let (m, _) = mean_var(values);
        ((g - 1.0) / g * values.iter().map(|v| (v - m) * (v - m)).sum::<f64>()).sqrt()
    };
    let rows = n_list
        .iter()
        .enumerate()
        .map(|(j, &n)| GrowthRow {
            n: n as u64,
            norm: norms[j],
            stderr: if groups >= 2 {
                jackknife(&norm_reps.iter().map(|r| r[j]).collect::<Vec<_>>())
            } else {
                f64::NAN
            },
            mode,
        })
        .collect();
    let exponent_stderr = if groups >= 2 && exp_reps.iter().all(Option::is_some) {
        Some(jackknife(
            &exp_reps.into_iter().flatten().collect::<Vec<_>>(),
        ))
    } else {
        None
    };
    Ok(GrowthReport {
        rows,
        exponent,
        exponent_stderr,
        y_samples: y_samples.len(),
        inner_replicas,
    })
}

/// Estimates of `Φ_n(t) = E exp(i t S_n/√n)` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CharFnTable {
    pub n: usize,
    pub start: Starts,
    pub t: Vec<f64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    /// Standard error of the complex estimate, `√(Var cos + Var sin)/√R`.
    pub stderr: Vec<f64>,
    pub mode: EstimateMode,
}

impl CharFnTable {
    fn from_columns(
        n: usize,
        start: &Starts,
        t_grid: &[f64],
        mode: EstimateMode,
        cols: Vec<(f64, f64, f64)>,
    ) -> Self {
        let mut table = CharFnTable {
            n,
            start: start.clone(),
            t: t_grid.to_vec(),
            re: Vec::with_capacity(t_grid.len()),
            im: Vec::with_capacity(t_grid.len()),
            stderr: Vec::with_capacity(t_grid.len()),
            mode,
        };
        for (&t, (re, im, se)) in t_grid.iter().zip(cols) {
            let (re, im, se) = if t == 0.0 {
                (1.0, 0.0, 0.0)
            } else {
                (re, im, se)
            };
            // Evaluated at |t|; negative t takes the conjugate.
            table.re.push(re);
            table.im.push(if t < 0.0 { -im } else { im });
            table.stderr.push(se);
        }
        table
    }

    pub fn modulus(&self, i: usize) -> f64 {
        self.re[i].hypot(self.im[i])
    }
}

fn check_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::Precondition("t grid is empty".into()));
    }
    match t_grid.iter().find(|t| !t.is_finite()) {
        Some(&t) => Err(Error::Domain {
            what: "t",
            value: t,
            domain: "finite reals",
        }),
        None => Ok(()),
    }
}

/// Characteristic function of `S_n/√n` for `φ − mean`.
///
/// Monte Carlo uses the same replicas as [`normalized_sums`]. Exact mode
/// walks all words and needs a point start.
#[allow(clippy::too_many_arguments)]
pub fn char_fn<F>(
    system: &IfsSystem,
    phi: F,
    mean: f64,
    start: &Starts,
    n: usize,
    t_grid: &[f64],
    plan: &EvalPlan,
) -> Result<CharFnTable>
where
    F: Fn(f64) -> f64 + Sync,
{
    check_grid(t_grid)?;
    start.validate()?;
    if n == 0 {
        return Err(Error::Precondition(
            "characteristic function needs n ≥ 1".into(),
        ));
    }
    let abs_t: Vec<f64> = t_grid.iter().map(|t| t.abs()).collect();
    let mode = match start {
        Starts::Point(_) => plan.resolve(system.len(), n)?,
        _ if plan.mode == crate::plan::Mode::Exact => {
            return Err(Error::Precondition(
                "exact characteristic functions need a point start".into(),
            ))
        }
        _ => EvalPlan {
            mode: crate::plan::Mode::Mc,
            ..*plan
        }
        .resolve(system.len(), n)?,
    };
    let cols = match (mode, start) {
        (EstimateMode::Exact, Starts::Point(x)) => {
            let scale = 1.0 / (n as f64).sqrt();
            let acc = walk_words(
                system,
                (*x, 0.0),
                n,
                plan.budget,
                2 * abs_t.len(),
                |&(y, s), sym| {
                    let z = system.step(sym, y);
                    (z, s + phi(z) - mean)
                },
                |d, &(_, s), w, acc| {
                    if d == n {
                        for (j, t) in abs_t.iter().enumerate() {
                            let (sin, cos) = (t * s * scale).sin_cos();
                            acc[2 * j] += w * cos;
                            acc[2 * j + 1] += w * sin;
                        }
                    }
                    true
                },
            )?;
            (0..abs_t.len())
                .map(|j| (acc[2 * j], acc[2 * j + 1], 0.0))
                .collect()
        }
        _ => {
            let sums = normalized_sums(system, &phi, mean, start, n, plan.replicas, plan.seed)?;
            char_fn_columns(&sums, &abs_t)
        }
    };
    Ok(CharFnTable::from_columns(n, start, t_grid, mode, cols))
}

/// Empirical characteristic function of `samples` at each `t`.
pub fn char_fn_columns(samples: &[f64], t_grid: &[f64]) -> Vec<(f64, f64, f64)> {
    let r = samples.len() as f64;
    t_grid
        .iter()
        .map(|&t| {
            let (mut sc, mut ss, mut scc, mut sss) = (0.0, 0.0, 0.0, 0.0);
            for &s in samples {
                let (sin, cos) = (t * s).sin_cos();
                sc += cos;
                ss += sin;
                scc += cos * cos;
                sss += sin * sin;
            }
            let (mc, ms) = (sc / r, ss / r);
            let var = ((scc / r - mc * mc) + (sss / r - ms * ms)).max(0.0) * r / (r - 1.0).max(1.0);
            (mc, ms, (var / r).sqrt())
        })
        .collect()
}

/// `sup_t |Φ_A(t) − Φ_B(t)|` with the standard error at the maximizing `t`,
/// propagated as if the tables were independent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CharFnGap {
    pub n: usize,
    pub sup: f64,
    pub argmax_t: f64,
    pub stderr: f64,
}

pub fn char_fn_gap(a: &CharFnTable, b: &CharFnTable) -> Result<CharFnGap> {
    if a.t != b.t || a.n != b.n {
        return Err(Error::Precondition(
            "tables must share n and the t grid".into(),
        ));
    }
    let mut best = CharFnGap {
        n: a.n,
        sup: 0.0,
        argmax_t: a.t[0],
        stderr: a.stderr[0].hypot(b.stderr[0]),
    };
    for i in 0..a.t.len() {
        let d = (a.re[i] - b.re[i]).hypot(a.im[i] - b.im[i]);
        if d > best.sup {
            best = CharFnGap {
                n: a.n,
                sup: d,
                argmax_t: a.t[i],
                stderr: a.stderr[i].hypot(b.stderr[i]),
            };
        }
    }
    Ok(best)
}
