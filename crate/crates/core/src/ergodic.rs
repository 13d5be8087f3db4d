//! Diagnostics for uniqueness, stability and synchronization of the chain,
//! and for convergence of the dual operator.
//!
//! Limits against the invariant measure are compared with burn-in estimates
//! whose standard errors are reported, since the invariant measure has no
//! closed form.

use serde::{Deserialize, Serialize};

use crate::chain::{check_state, map_replicas, next_symbol, run_coupled_pair, terminal_state};
use crate::error::{check_open_unit, check_unit, Error, Result};
use crate::ifs::{
    dual_apply_exact, dual_ladder_exact, markov_iterate_atoms, walk_words, IfsSystem,
};
use crate::measure::{wasserstein1, EmpiricalMeasure};
use crate::plan::{Estimate, EstimateMode, EvalPlan};
use crate::rng::StreamSpec;
use crate::stats::{least_squares, mean_var};

/// `(1/n) Σ_{k=1..n} φ(X_k)` along one trajectory from `x`.
pub fn birkhoff_average<F>(
    system: &IfsSystem,
    phi: F,
    x: f64,
    n: usize,
    stream: StreamSpec,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    check_unit("x", x)?;
    if n == 0 {
        return Err(Error::Precondition("Birkhoff average needs n ≥ 1".into()));
    }
    let mut gen = stream.generator();
    let mut state = x;
    let mut sum = 0.0;
    for _ in 0..n {
        state = system.step(next_symbol(system, &mut gen), state);
        sum += phi(state);
    }
    check_state(state)?;
    Ok(sum / n as f64)
}

/// `W₁(Pⁿδ_x, Pⁿδ_y)`.
///
/// Exact mode pushes both Diracs forward through all `N^n` words. Monte Carlo
/// averages `|f^n(x) − f^n(y)|` over synchronously coupled pairs, which bounds
/// `W₁` from above.
pub fn stability_gap(
    system: &IfsSystem,
    x: f64,
    y: f64,
    n: usize,
    plan: &EvalPlan,
) -> Result<Estimate> {
    check_open_unit("x", x)?;
    check_open_unit("y", y)?;
    match plan.resolve(system.len(), n)? {
        EstimateMode::Exact => {
            let px = markov_iterate_atoms(system, &EmpiricalMeasure::dirac(x)?, n);
            let py = markov_iterate_atoms(system, &EmpiricalMeasure::dirac(y)?, n);
            Ok(Estimate::exact(wasserstein1(&px, &py)?))
        }
        EstimateMode::Mc => {
            let gaps = map_replicas(plan.replicas, |r| {
                let mut gx = StreamSpec::new(plan.seed, r).generator();
                let mut gy = gx.clone();
                Ok((terminal_state(system, x, n, &mut gx)?
                    - terminal_state(system, y, n, &mut gy)?)
                .abs())
            })?;
            Ok(Estimate::from_samples(&gaps))
        }
    }
}

/// One row of a decay profile or convergence ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LadderRow {
    pub n_or_k: u64,
    pub value: f64,
    pub stderr: f64,
    pub mode: EstimateMode,
}

/// Expected coupled gap `E|f^k(x) − f^k(y)|` for `k = 1..=n_max` and the
/// fitted decay rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyncProfile {
    pub rows: Vec<LadderRow>,
    /// `exp` of the least-squares slope of `ln gap` against `k` over the fit window.
    pub q_hat: Option<f64>,
    pub q_hat_stderr: Option<f64>,
    /// First and last `k` of the fit window.
    pub fit_window: (u64, u64),
    /// Set when the rate is undefined, e.g. a zero gap in the window.
    pub degenerate: bool,
}

/// Expected gap profile under synchronous coupling.
///
/// Depths within the enumeration budget are computed exactly (unless the plan
/// forces Monte Carlo); deeper ones come from one coupled Monte Carlo run.
/// `fit_last` is the number of trailing depths used for the rate fit and
/// defaults to the tail half.
pub fn sync_gap_profile(
    system: &IfsSystem,
    x: f64,
    y: f64,
    n_max: usize,
    plan: &EvalPlan,
    fit_last: Option<usize>,
) -> Result<SyncProfile> {
    check_open_unit("x", x)?;
    check_open_unit("y", y)?;
    if n_max == 0 {
        return Err(Error::Precondition("profile needs n_max ≥ 1".into()));
    }
    let exact_depth = match plan.mode {
        crate::plan::Mode::Mc => 0,
        crate::plan::Mode::Exact => {
            plan.budget.check(system.len(), n_max)?;
            n_max
        }
        crate::plan::Mode::Auto => (0..=n_max)
            .take_while(|&d| plan.budget.allows(system.len(), d))
            .last()
            .unwrap_or(0),
    };

    let mut rows = Vec::with_capacity(n_max);
    if exact_depth > 0 {
        let gaps = walk_words(
            system,
            (x, y),
            exact_depth,
            plan.budget,
            exact_depth,
            |&(a, b), s| (system.step(s, a), system.step(s, b)),
            |d, &(a, b), w, acc| {
                acc[d - 1] += w * (b - a).abs();
                true
            },
        )?;
        rows.extend(gaps.into_iter().enumerate().map(|(i, g)| LadderRow {
            n_or_k: i as u64 + 1,
            value: g,
            stderr: 0.0,
            mode: EstimateMode::Exact,
        }));
    }
    if exact_depth < n_max {
        if plan.replicas < 2 {
            return Err(Error::Precondition(format!(
                "Monte Carlo needs at least 2 replicas, plan has {}",
                plan.replicas
            )));
        }
        let paths = map_replicas(plan.replicas, |r| {
            let (a, b) = run_coupled_pair(system, x, y, n_max, StreamSpec::new(plan.seed, r))?;
            Ok(a.states
                .iter()
                .zip(&b.states)
                .skip(exact_depth)
                .map(|(p, q)| (q - p).abs())
                .collect::<Vec<f64>>())
        })?;
        for j in 0..n_max - exact_depth {
            let column: Vec<f64> = paths.iter().map(|p| p[j]).collect();
            let est = Estimate::from_samples(&column);
            rows.push(LadderRow {
                n_or_k: (exact_depth + j + 1) as u64,
                value: est.value,
                stderr: est.stderr,
                mode: EstimateMode::Mc,
            });
        }
    }

    let window = fit_last.unwrap_or(n_max.div_ceil(2)).clamp(1, n_max);
    let tail = &rows[n_max - window..];
    let fit_window = (tail[0].n_or_k, tail[tail.len() - 1].n_or_k);
    let fit = if tail.iter().all(|r| r.value > 0.0) {
        let ks: Vec<f64> = tail.iter().map(|r| r.n_or_k as f64).collect();
        let logs: Vec<f64> = tail.iter().map(|r| r.value.ln()).collect();
        least_squares(&ks, &logs)
    } else {
        None
    };
    Ok(SyncProfile {
        rows,
        q_hat: fit.map(|f| f.slope.exp()),
        q_hat_stderr: fit.map(|f| f.slope.exp() * f.slope_stderr),
        fit_window,
        degenerate: fit.is_none(),
    })
}

/// Per-stream comparison of the time spent in `(0, ξ)` by two coupled orbits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationReport {
    pub streams: usize,
    pub n: usize,
    /// Streams where the lower start spent fewer steps in `(0, ξ)`.
    pub violations: usize,
    /// Mean occupation fractions of the lower and upper orbit.
    pub mean_lower: f64,
    pub mean_upper: f64,
}

/// Counts streams where the orbit of `x < y` visits `(0, ξ)` less often than
/// the orbit of `y` under the same word. Order preservation makes this 0.
pub fn monotone_occupation_check(
    system: &IfsSystem,
    x: f64,
    y: f64,
    xi: f64,
    n: usize,
    streams: usize,
    seed: u64,
) -> Result<OccupationReport> {
    check_unit("x", x)?;
    check_unit("y", y)?;
    check_unit("xi", xi)?;
    if x > y {
        return Err(Error::Precondition(format!("need x ≤ y, got {x} > {y}")));
    }
    let inside = |s: f64| s > 0.0 && s < xi;
    let counts = map_replicas(streams, |r| {
        let mut gen = StreamSpec::new(seed, r).generator();
        let (mut a, mut b) = (x, y);
        let (mut ca, mut cb) = (0u64, 0u64);
        for _ in 0..n {
            let s = next_symbol(system, &mut gen);
            a = system.step(s, a);
            b = system.step(s, b);
            if a > b {
                return Err(Error::InvariantBreach(format!(
                    "coupled orbits crossed on stream {r}: {a} > {b}"
                )));
            }
            ca += inside(a) as u64;
            cb += inside(b) as u64;
        }
        Ok((ca, cb))
    })?;
    let per = |f: fn(&(u64, u64)) -> u64| {
        counts.iter().map(f).sum::<u64>() as f64 / (streams.max(1) * n.max(1)) as f64
    };
    Ok(OccupationReport {
        streams,
        n,
        violations: counts.iter().filter(|(a, b)| a < b).count(),
        mean_lower: per(|c| c.0),
        mean_upper: per(|c| c.1),
    })
}

/// Supremum over a grid of `|value|` with its location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSup {
    pub n: u64,
    pub sup: f64,
    pub argmax: f64,
    /// Standard error at `argmax`; 0 when exact.
    pub stderr: f64,
    pub mode: EstimateMode,
}

fn grid_sup(n: usize, grid: &[f64], values: &[Estimate], mode: EstimateMode) -> GridSup {
    let (i, est) = values
        .iter()
        .enumerate()
        .fold((0, values[0]), |(bi, be), (i, e)| {
            if e.value.abs() > be.value.abs() {
                (i, *e)
            } else {
                (bi, be)
            }
        });
    GridSup {
        n: n as u64,
        sup: est.value.abs(),
        argmax: grid[i],
        stderr: est.stderr,
        mode,
    }
}

fn check_interior_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Precondition("grid is empty".into()));
    }
    grid.iter()
        .try_for_each(|&x| check_open_unit("grid point", x))
}

/// `sup_x |(1/n) Σ_{k=1..n} U^k φ(x)|` over `grid`.
///
/// `φ` must vanish at 0 and 1 and be centered against the invariant measure.
/// Monte Carlo estimates `(1/n) Σ φ(X_k)` along trajectories from each point.
pub fn cesaro_norm<F>(
    system: &IfsSystem,
    phi: F,
    n: usize,
    grid: &[f64],
    plan: &EvalPlan,
) -> Result<GridSup>
where
    F: Fn(f64) -> f64 + Sync,
{
    if phi(0.0).abs() > 1e-12 || phi(1.0).abs() > 1e-12 {
        return Err(Error::Precondition(format!(
            "φ must vanish at the endpoints, got φ(0) = {}, φ(1) = {}",
            phi(0.0),
            phi(1.0)
        )));
    }
    if n == 0 {
        return Err(Error::Precondition("Cesàro mean needs n ≥ 1".into()));
    }
    if grid.is_empty() {
        return Err(Error::Precondition("grid is empty".into()));
    }
    grid.iter().try_for_each(|&x| check_unit("grid point", x))?;
    let mode = plan.resolve(system.len(), n)?;
    let values = grid
        .iter()
        .map(|&x| match mode {
            EstimateMode::Exact => {
                let ladder = dual_ladder_exact(system, &phi, n, x, plan.budget)?;
                Ok(Estimate::exact(ladder.iter().sum::<f64>() / n as f64))
            }
            EstimateMode::Mc => {
                let averages = map_replicas(plan.replicas, |r| {
                    birkhoff_average(system, &phi, x, n, StreamSpec::new(plan.seed, r))
                })?;
                Ok(Estimate::from_samples(&averages))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(grid_sup(n, grid, &values, mode))
}

/// Distance of `U^n f` from `⟨μ̂*, f⟩`, uniformly on an interior grid and in
/// `L²(μ̂*)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualConvergenceReport {
    pub grid: GridSup,
    /// `⟨μ̂*, f⟩` from the reference sample.
    pub reference_mean: f64,
    pub reference_stderr: f64,
    /// `(mean over reference points y of (U^n f(y) − ⟨μ̂*, f⟩)²)^(1/2)`.
    pub l2_discrepancy: f64,
    pub l2_points: usize,
}

/// Compares `U^n f(x)` with `⟨μ̂*, f⟩` for `x` in `grid` (interior points
/// only; 0 and 1 are absorbing) and in `L²` over `l2_points` evenly strided
/// points of the reference sample.
pub fn dual_convergence_check<F>(
    system: &IfsSystem,
    f: F,
    grid: &[f64],
    n: usize,
    reference: &EmpiricalMeasure,
    l2_points: usize,
    plan: &EvalPlan,
) -> Result<DualConvergenceReport>
where
    F: Fn(f64) -> f64 + Sync,
{
    check_interior_grid(grid)?;
    if reference.is_empty() {
        return Err(Error::Precondition("reference sample is empty".into()));
    }
    let values: Vec<f64> = reference.points().iter().map(|&y| f(y)).collect();
    let (reference_mean, var) = mean_var(&values);
    let reference_stderr = (var / values.len() as f64).sqrt();
    let mode = plan.resolve(system.len(), n)?;
    let u_n = |x: f64| -> Result<Estimate> {
        match mode {
            EstimateMode::Exact => Ok(Estimate::exact(dual_apply_exact(
                system,
                &f,
                n,
                x,
                plan.budget,
            )?)),
            EstimateMode::Mc => {
                let ends = map_replicas(plan.replicas, |r| {
                    Ok(f(terminal_state(
                        system,
                        x,
                        n,
                        &mut StreamSpec::new(plan.seed, r).generator(),
                    )?))
                })?;
                Ok(Estimate::from_samples(&ends))
            }
        }
    };
    let diffs = grid
        .iter()
        .map(|&x| {
            u_n(x).map(|e| Estimate {
                value: e.value - reference_mean,
                ..e
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let l2_points = l2_points.min(reference.len());
    let mut ss = 0.0;
    for i in 0..l2_points {
        let y = reference.points()[i * reference.len() / l2_points];
        let d = u_n(y)?.value - reference_mean;
        ss += d * d;
    }
    Ok(DualConvergenceReport {
        grid: grid_sup(n, grid, &diffs, mode),
        reference_mean,
        reference_stderr,
        l2_discrepancy: if l2_points > 0 {
            (ss / l2_points as f64).sqrt()
        } else {
            0.0
        },
        l2_points,
    })
}

/// Largest mass of a sample within any window of the given width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomlessnessReport {
    pub width: f64,
    /// Left end of the heaviest window.
    pub location: f64,
    pub mass: f64,
    /// `mass < threshold`.
    pub passed: bool,
    pub threshold: f64,
}

/// Default cluster width for the atomlessness diagnostic.
pub const CLUSTER_WIDTH: f64 = 1e-9;
/// A cluster holding this much mass or more suggests an atom.
pub const CLUSTER_MASS_LIMIT: f64 = 0.01;

/// Heaviest window `[p, p + width]` starting at an atom.
pub fn atomlessness_diagnostic(mu: &EmpiricalMeasure, width: f64) -> Result<AtomlessnessReport> {
    if mu.is_empty() {
        return Err(Error::Precondition("sample is empty".into()));
    }
    let (pts, ws) = (mu.points(), mu.weights());
    let (mut best, mut location) = (0.0, pts[0]);
    let (mut hi, mut mass) = (0, 0.0);
    for lo in 0..pts.len() {
        while hi < pts.len() && pts[hi] <= pts[lo] + width {
            mass += ws[hi];
            hi += 1;
        }
        if mass > best {
            best = mass;
            location = pts[lo];
        }
        mass -= ws[lo];
    }
    Ok(AtomlessnessReport {
        width,
        location,
        mass: best,
        passed: best < CLUSTER_MASS_LIMIT,
        threshold: CLUSTER_MASS_LIMIT,
    })
}

/// `W₁` between burn-in samples started from different points; all should be
/// small when the invariant measure on `(0, 1)` is unique.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StartComparison {
    pub x: f64,
    pub y: f64,
    pub w1: f64,
}

pub fn start_independence(
    system: &IfsSystem,
    starts: &[f64],
    n_burn: usize,
    replicas: usize,
    seed: u64,
) -> Result<Vec<StartComparison>> {
    let samples = starts
        .iter()
        .map(|&x| {
            check_open_unit("start", x)?;
            let xs = map_replicas(replicas, |r| {
                terminal_state(system, x, n_burn, &mut StreamSpec::new(seed, r).generator())
            })?;
            EmpiricalMeasure::from_samples(
                &xs.iter().map(|v| v.clamp(0.0, 1.0)).collect::<Vec<_>>(),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for i in 0..starts.len() {
        for j in i + 1..starts.len() {
            out.push(StartComparison {
                x: starts[i],
                y: starts[j],
                w1: wasserstein1(&samples[i], &samples[j])?,
            });
        }
    }
    Ok(out)
}

/// Sup of `|U^k f − ⟨μ̂*, f⟩|` on the grid for each `k` in `ladder`.
pub fn dual_convergence_ladder<F>(
    system: &IfsSystem,
    f: F,
    grid: &[f64],
    ladder: &[usize],
    reference: &EmpiricalMeasure,
    plan: &EvalPlan,
) -> Result<Vec<DualConvergenceReport>>
where
    F: Fn(f64) -> f64 + Sync,
{
    ladder
        .iter()
        .map(|&n| dual_convergence_check(system, &f, grid, n, reference, 0, plan))
        .collect()
}
