//! Subcommand implementations. Each reads its parameters, runs the library
//! operation and writes reports into the run directory.

use ifs_ergodic::chain::{
    burn_in_sample, ensemble_terminals, map_replicas, run_trajectory, terminal_state, Starts,
};
use ifs_ergodic::clt::{
    char_fn, char_fn_gap, clt_report, mw_growth, Centering, CharFnTable, CltReport,
};
use ifs_ergodic::ergodic::{
    birkhoff_average, cesaro_norm, dual_convergence_check, stability_gap, sync_gap_profile,
    LadderRow,
};
use ifs_ergodic::ifs::{calibrate, check_admissible, regime, sweep_alpha, DEFAULT_GRID_POINTS};
use ifs_ergodic::ks::ks_two_sample;
use ifs_ergodic::measure::{
    verify_boundary_mass, verify_escape_bound, verify_return_probability, BoundCheck, Side,
};
use ifs_ergodic::rng::derive_seed;
use ifs_ergodic::{Estimate, EvalPlan, IfsSystem, StreamSpec};
use serde_json::json;

use crate::config::{Params, RunConfig};
use crate::error::{CliError, CliResult};
use crate::observable::{Observable, ObservableSpec};
use crate::output::{num, RunDir};

const DEFAULT_N_BURN: usize = 1_000;
const DEFAULT_BURN_REPLICAS: usize = 10_000;
const DEFAULT_GRID: [f64; 9] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Which operation to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Admissible,
    Calibrate,
    Simulate,
    Stability,
    Sync,
    BoundsEscape,
    BoundsBoundary,
    BoundsReturn,
    ErgodicBirkhoff,
    ErgodicCesaro,
    ErgodicDual,
    CltSums,
    CltKs,
    CltMw,
    CltCharfn,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::Admissible => "admissible",
            Action::Calibrate => "calibrate",
            Action::Simulate => "simulate",
            Action::Stability => "stability",
            Action::Sync => "sync",
            Action::BoundsEscape => "bounds escape",
            Action::BoundsBoundary => "bounds boundary",
            Action::BoundsReturn => "bounds return",
            Action::ErgodicBirkhoff => "ergodic birkhoff",
            Action::ErgodicCesaro => "ergodic cesaro",
            Action::ErgodicDual => "ergodic dual",
            Action::CltSums => "clt sums",
            Action::CltKs => "clt ks",
            Action::CltMw => "clt mw",
            Action::CltCharfn => "clt charfn",
        }
    }
}

struct Ctx<'a> {
    config: &'a RunConfig,
    system: IfsSystem,
    p: &'a Params,
}

impl Ctx<'_> {
    fn plan(&self, default_replicas: usize) -> EvalPlan {
        EvalPlan {
            mode: self.config.mode,
            budget: self.config.budget(),
            replicas: self.p.replicas.unwrap_or(default_replicas),
            seed: self.config.seed,
        }
    }

    fn seed(&self) -> u64 {
        self.config.seed
    }

    /// Seed for an auxiliary experiment, distinct from the main streams.
    fn aux_seed(&self, tag: &str) -> u64 {
        derive_seed(self.config.seed, tag)
    }

    fn n_burn(&self) -> usize {
        self.p.n_burn.unwrap_or(DEFAULT_N_BURN)
    }

    fn burn_replicas(&self) -> usize {
        self.p.burn_replicas.unwrap_or(DEFAULT_BURN_REPLICAS)
    }

    fn ladder(&self, default: &[usize]) -> Vec<usize> {
        match (&self.p.n_list, self.p.n) {
            (Some(list), _) => list.clone(),
            (None, Some(n)) => vec![n],
            (None, None) => default.to_vec(),
        }
    }

    fn grid(&self) -> Vec<f64> {
        self.p.grid.clone().unwrap_or_else(|| DEFAULT_GRID.to_vec())
    }

    fn observable(&self, default: ObservableSpec) -> CliResult<Observable> {
        let spec = match &self.p.phi {
            Some(name) => name.parse()?,
            None => default,
        };
        spec.resolve(
            &self.system,
            self.n_burn(),
            self.burn_replicas(),
            self.aux_seed("balance"),
        )
    }

    fn starts(&self, raw: Option<&str>, default: f64) -> CliResult<Starts> {
        let starts = match raw {
            None => Starts::Point(default),
            Some("stationary") => Starts::Stationary {
                n_burn: self.n_burn(),
                seed: self.aux_seed("stationary"),
            },
            Some(v) => Starts::Point(v.parse().map_err(|_| {
                CliError::Usage(format!("start {v:?} is neither a number nor `stationary`"))
            })?),
        };
        starts.validate()?;
        Ok(starts)
    }

    fn centering(&self) -> Centering {
        match self.p.center {
            Some(c) => Centering::Known(c),
            None => Centering::BurnIn {
                n_burn: self.n_burn(),
                replicas: self.burn_replicas(),
                seed: self.aux_seed("centering"),
            },
        }
    }
}

fn ladder_rows(rows: &[LadderRow]) -> impl Iterator<Item = Vec<String>> + '_ {
    rows.iter().map(|r| {
        vec![
            r.n_or_k.to_string(),
            num(r.value),
            num(r.stderr),
            r.mode.to_string(),
        ]
    })
}

const LADDER_HEADER: [&str; 4] = ["n_or_k", "value", "stderr", "mode"];

fn row(n: usize, est: Estimate) -> LadderRow {
    LadderRow {
        n_or_k: n as u64,
        value: est.value,
        stderr: est.stderr,
        mode: est.mode,
    }
}

pub fn execute(
    action: Action,
    config: &RunConfig,
    system: IfsSystem,
    out: &mut RunDir,
) -> CliResult<()> {
    let ctx = Ctx {
        config,
        system,
        p: &config.params,
    };
    match action {
        Action::Admissible => admissible(&ctx, out),
        Action::Calibrate => calibrate_cmd(&ctx, out),
        Action::Simulate => simulate(&ctx, out),
        Action::Stability => stability(&ctx, out),
        Action::Sync => sync(&ctx, out),
        Action::BoundsEscape | Action::BoundsBoundary | Action::BoundsReturn => {
            bounds(&ctx, action, out)
        }
        Action::ErgodicBirkhoff => birkhoff(&ctx, out),
        Action::ErgodicCesaro => cesaro(&ctx, out),
        Action::ErgodicDual => dual(&ctx, out),
        Action::CltSums | Action::CltKs => clt(&ctx, action, out),
        Action::CltMw => mw(&ctx, out),
        Action::CltCharfn => charfn(&ctx, out),
    }
}

fn admissible(ctx: &Ctx, out: &mut RunDir) -> CliResult<()> {
    let report = check_admissible(
        &ctx.system,
        ctx.p.grid_points.unwrap_or(DEFAULT_GRID_POINTS),
    );
    out.json("admissible.json", &report)
}

fn calibrate_cmd(ctx: &Ctx, out: &mut RunDir) -> CliResult<()> {
    let alpha = ctx.p.alpha.unwrap_or(0.5);
    let mut report = serde_json::Map::new();
    if let Some(alphas) = &ctx.p.alphas {
        let rows = sweep_alpha(&ctx.system, alphas)?;
        out.csv(
            "sweep.csv",
            &["alpha", "delta_max"],
            rows.iter()
                .map(|r| vec![num(r.alpha), r.delta_max.map(num).unwrap_or_default()]),
        )?;
        let best = rows
            .iter()
            .filter_map(|r| r.delta_max.map(|d| (r.alpha, d)))
            .fold(None, |best: Option<(f64, f64)>, (a, d)| match best {
                Some((_, bd)) if bd >= d => best,
                _ => Some((a, d)),
            });
        report.insert("sweep".into(), json!(rows));
        report.insert("best_alpha".into(), json!(best.map(|b| b.0)));
    }
    let consts = calibrate(&ctx.system, alpha)?;
    if let Some(n) = ctx.p.n {
        report.insert("regime".into(), json!(regime(&consts, n as u64)?));
    }
    report.insert("constants".into(), json!(consts));
    out.json("calibrate.json", report)
}

fn simulate(ctx: &Ctx, out: &mut RunDir) -> CliResult<()> {
    let n = ctx.p.n.unwrap_or(100);
    let replicas = ctx.p.replicas.unwrap_or(1);
    let starts = ctx.starts(ctx.p.start.as_deref(), ctx.p.x.unwrap_or(0.5))?;
    let x0 = starts.start(&ctx.system, 0)?;
    let path = run_trajectory(&ctx.system, x0, n, StreamSpec::new(ctx.seed(), 0))?;
    let first = std::iter::once(vec!["0".to_string(), String::new(), num(path.x0)]);
    let steps = path
        .symbols
        .iter()
        .zip(&path.states)
        .enumerate()
        .map(|(k, (s, x))| vec![(k + 1).to_string(), (s + 1).to_string(), num(*x)]);
    out.csv(
        "trajectory.csv",
        &["step", "symbol", "state"],
        first.chain(steps),
    )?;
    let terminals = ensemble_terminals(&ctx.system, &starts, n, replicas, ctx.seed())?;
    out.csv(
        "terminals.csv",
        &["replica", "terminal"],
        terminals
            .iter()
            .enumerate()
            .map(|(r, x)| vec![r.to_string(), num(*x)]),
    )?;
    out.json(
        "simulate.json",
        json!({
            "n": n,
            "replicas": replicas,
            "start": starts,
            "terminal_mean": Estimate::from_samples(&terminals),
        }),
    )
}

fn stability(ctx: &Ctx, out: &mut RunDir) -> CliResult<()> {
    let (x, y) = (ctx.p.x.unwrap_or(0.3), ctx.p.y.unwrap_or(0.7));
    let plan = ctx.plan(10_000);
    let ladder = match (&ctx.p.n_list, ctx.p.n) {
        (Some(list), _) => list.clone(),
        (None, n) => (1..=n.unwrap_or(12)).collect(),
    };
    let rows = ladder
        .iter()
        .map(|&n| Ok(row(n, stability_gap(&ctx.system, x, y, n, &plan)?)))
        .collect::<CliResult<Vec<_>>>()?;
    out.csv("stability.csv", &LADDER_HEADER, ladder_rows(&rows))?;
    out.json(
        "stability.json",
        json!({ "x": x, "y": y, "mode_requested": plan.mode, "rows": rows }),
    )
}

fn sync(ctx: &Ctx, out: &mut RunDir) -> CliResult<()> {
    let (x, y) = (ctx.p.x.unwrap_or(0.3), ctx.p.y.unwrap_or(0.7));
    let plan = ctx.plan(100_000);
    let profile = sync_gap_profile(
        &ctx.system,
        x,
        y,
        ctx.p.n.unwrap_or(10),
        &plan,
        ctx.p.fit_last,
    )?;
    out.csv("sync.csv", &LADDER_HEADER, ladder_rows(&profile.rows))?;
    out.json(
        "sync.json",
        json!({ "x": x, "y": y, "mode_requested": plan.mode, "profile": profile }),
    )
}

fn bounds(ctx: &Ctx, action: Action, out: &mut RunDir) -> CliResult<()> {
    let consts = calibrate(&ctx.system, ctx.p.alpha.unwrap_or(0.5))?;
    let plan = ctx.plan(100_000);
    let sides = match ctx.p.side {
        Some(s) => vec![s],
        None => vec![Side::Lower, Side::Upper],
    };
    let mut checks: Vec<BoundCheck> = Vec::new();
    for n in ctx.ladder(&[16]) {
        let n = n as u64;
        match action {
            Action::BoundsEscape => {
                for &side in &sides {
                    checks.push(verify_escape_bound(&ctx.system, &consts, n, side, &plan)?);
                }
            }
            Action::BoundsBoundary => {
                let r = regime(&consts, n)?;
                let k = ctx.p.k.unwrap_or(r.k);
                for &side in &sides {
                    // Default start: the admissible point nearest ½.
                    let x = ctx.p.x.unwrap_or(match side {
                        Side::Lower => r.eps_n.max(0.5),
                        Side::Upper => (1.0 - r.eps_n).min(0.5),
                    });
                    checks.push(verify_boundary_mass(
                        &ctx.system,
                        &consts,
                        n,
                        k,
                        x,
                        side,
                        &plan,
                    )?);
                }
            }
            _ => {
                let a = ctx.p.a.unwrap_or(1e-9);
                checks.push(verify_return_probability(
                    &ctx.system,
                    &consts,
                    a,
                    n,
                    &plan,
                )?);
            }
        }
    }
    out.csv(
        "bounds.csv",
        &[
            "kind", "n", "k", "side", "x", "estimate", "stderr", "bound", "status", "mode",
        ],
        checks.iter().map(|c| {
            vec![
                c.kind.clone(),
                c.n.to_string(),
                c.k.to_string(),
                c.side.map(|s| s.to_string()).unwrap_or_default(),
                num(c.x),
                num(c.estimate),
                num(c.stderr),
                num(c.bound),
                c.status().to_string(),
                c.mode.to_string(),
            ]
        }),
    )?;
    let violated = checks.iter().filter(|c| c.status() == "violated").count();
    out.json(
        "bounds.json",
        json!({
            "constants": consts,
            "mode_requested": plan.mode,
            "violated": violated,
            "checks": checks,
        }),
    )
}

fn birkhoff(ctx: &Ctx, out: &mut RunDir) -> CliResult<()> {
    let phi = ctx.observable(ObservableSpec::Identity)?;
    let x = ctx.p.x.unwrap_or(0.3);
    let n = ctx.p.n.unwrap_or(10_000);
    let replicas = ctx.p.replicas.unwrap_or(100);
    let system = &ctx.system;
    let averages = map_replicas(replicas, |r| {
        birkhoff_average(
            system,
            |s| phi.eval(s),
            x,
            n,
            StreamSpec::new(ctx.seed(), r),
        )
    })?;
    out.csv(
        "birkhoff.csv",
        &["replica", "average"],
        averages
            .iter()
            .enumerate()
            .map(|(r, v)| vec![r.to_string(), num(*v)]),
    )?;
    out.json(
        "birkhoff.json",
        json!({ "phi": phi, "x": x, "n": n, "replicas": replicas, "mean": Estimate::from_samples(&averages) }),
    )
}

fn cesaro(ctx: &Ctx, out: &mut RunDir) -> CliResult<()> {
    let phi = ctx.observable(ObservableSpec::Balanced)?;
    let plan = ctx.plan(1_000);
    let grid = ctx.grid();
    let sups = ctx
        .ladder(&[2, 4, 8, 12])
        .into_iter()
        .map(|n| cesaro_norm(&ctx.system, |x| phi.eval(x), n, &grid, &plan))
        .collect::<Result<Vec<_>, _>>()?;
    out.csv(
        "cesaro.csv",
        &LADDER_HEADER,
        sups.iter().map(|g| {
            vec![
                g.n.to_string(),
                num(g.sup),
                num(g.stderr),
                g.mode.to_string(),
            ]
        }),
    )?;
    out.json(
        "cesaro.json",
        json!({ "phi": phi, "grid": grid, "mode_requested": plan.mode, "rows": sups }),
    )
}

fn dual(ctx: &Ctx, out: &mut RunDir) -> CliResult<()> {
    let phi = ctx.observable(ObservableSpec::Identity)?;
    let plan = ctx.plan(1_000);
    let grid = ctx.grid();
    let reference = burn_in_sample(
        &ctx.system,
        ctx.n_burn(),
        ctx.burn_replicas(),
        ctx.aux_seed("reference"),
    )?;
    let l2_points = ctx.p.y_samples.unwrap_or(0);
    let reports = ctx
        .ladder(&[1, 2, 4, 8, 12])
        .into_iter()
        .map(|n| {
            dual_convergence_check(
                &ctx.system,
                |x| phi.eval(x),
                &grid,
                n,
                &reference,
                l2_points,
                &plan,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    out.csv(
        "dual.csv",
        &LADDER_HEADER,
        reports.iter().map(|r| {
            vec![
                r.grid.n.to_string(),
                num(r.grid.sup),
                num(r.grid.stderr),
                r.grid.mode.to_string(),
            ]
        }),
    )?;
    out.json(
        "dual.json",
        json!({ "phi": phi, "grid": grid, "mode_requested": plan.mode, "rows": reports }),
    )
}

fn sample_rows(samples: &[f64]) -> impl Iterator<Item = Vec<String>> + '_ {
    samples
        .iter()
        .enumerate()
        .map(|(r, v)| vec![r.to_string(), num(*v)])
}

fn clt(ctx: &Ctx, action: Action, out: &mut RunDir) -> CliResult<()> {
    let phi = ctx.observable(ObservableSpec::Centered)?;
    let n = ctx.p.n.unwrap_or(1_000);
    let replicas = ctx.p.replicas.unwrap_or(10_000);
    let start = ctx.starts(ctx.p.start.as_deref(), ctx.p.x.unwrap_or(0.3))?;
    let centering = ctx.centering();
    let f = |x: f64| phi.eval(x);
    let (mut report, samples): (CltReport, _) =
        clt_report(&ctx.system, f, centering, &start, n, replicas, ctx.seed())?;
    report.samples_file = Some("samples.csv".into());
    out.csv("samples.csv", &["replica", "value"], sample_rows(&samples))?;
    if action == Action::CltSums {
        return out.json("clt.json", json!({ "phi": phi, "report": report }));
    }
    // Two-sample comparison against a second start on independent streams.
    let two_sample = match ctx.p.y {
        None => None,
        Some(y) => {
            let other = Starts::Point(y);
            let (other_report, other_samples) = clt_report(
                &ctx.system,
                f,
                Centering::Known(report.centering.value),
                &other,
                n,
                replicas,
                ctx.aux_seed("second-start"),
            )?;
            out.csv(
                "samples_y.csv",
                &["replica", "value"],
                sample_rows(&other_samples),
            )?;
            Some(json!({
                "y": y,
                "sigma2_y": other_report.sigma2,
                "ks": ks_two_sample(&samples, &other_samples)?,
            }))
        }
    };
    out.json(
        "ks.json",
        json!({ "phi": phi, "report": report, "two_sample": two_sample }),
    )
}

fn mw(ctx: &Ctx, out: &mut RunDir) -> CliResult<()> {
    let phi = ctx.observable(ObservableSpec::Centered)?;
    let plan = ctx.plan(0);
    let inner = ctx.p.inner_replicas.unwrap_or(1_000);
    let plan = EvalPlan {
        replicas: inner,
        ..plan
    };
    // Reference points stay in replica order so jackknife groups are random.
    let (n_burn, seed) = (ctx.n_burn(), ctx.aux_seed("reference"));
    let ys = map_replicas(ctx.p.y_samples.unwrap_or(200), |r| {
        terminal_state(
            &ctx.system,
            0.5,
            n_burn,
            &mut StreamSpec::new(seed, r).generator(),
        )
    })?;
    let n_list = ctx.ladder(&[64, 128, 256, 512]);
    let report = mw_growth(&ctx.system, |x| phi.eval(x), &n_list, &ys, inner, &plan)?;
    out.csv(
        "growth.csv",
        &LADDER_HEADER,
        report.rows.iter().map(|r| {
            vec![
                r.n.to_string(),
                num(r.norm),
                num(r.stderr),
                r.mode.to_string(),
            ]
        }),
    )?;
    out.json(
        "growth.json",
        json!({ "phi": phi, "mode_requested": plan.mode, "report": report }),
    )
}

fn table_rows(t: &CharFnTable) -> impl Iterator<Item = Vec<String>> + '_ {
    (0..t.t.len()).map(|i| vec![num(t.t[i]), num(t.re[i]), num(t.im[i]), num(t.stderr[i])])
}

fn charfn(ctx: &Ctx, out: &mut RunDir) -> CliResult<()> {
    let phi = ctx.observable(ObservableSpec::Centered)?;
    let n = ctx.p.n.unwrap_or(100);
    let plan = ctx.plan(100_000);
    let start = ctx.starts(ctx.p.start.as_deref(), ctx.p.x.unwrap_or(0.3))?;
    let t_grid = ctx
        .p
        .t_grid
        .clone()
        .unwrap_or_else(|| (0..=10).map(|i| i as f64 * 0.5).collect());
    let center =
        ifs_ergodic::clt::centering_estimate(&ctx.system, |x| phi.eval(x), ctx.centering())?;
    let table = char_fn(
        &ctx.system,
        |x| phi.eval(x),
        center.value,
        &start,
        n,
        &t_grid,
        &plan,
    )?;
    out.csv(
        "charfn.csv",
        &["t", "re", "im", "stderr"],
        table_rows(&table),
    )?;
    let gap = match ctx.p.y {
        None => None,
        Some(y) => {
            let other_plan = EvalPlan {
                seed: ctx.aux_seed("second-start"),
                ..plan
            };
            let other = char_fn(
                &ctx.system,
                |x| phi.eval(x),
                center.value,
                &Starts::Point(y),
                n,
                &t_grid,
                &other_plan,
            )?;
            out.csv(
                "charfn_y.csv",
                &["t", "re", "im", "stderr"],
                table_rows(&other),
            )?;
            Some(char_fn_gap(&table, &other)?)
        }
    };
    out.json(
        "charfn.json",
        json!({
            "phi": phi,
            "centering": center,
            "mode": table.mode,
            "mode_requested": plan.mode,
            "start": start,
            "n": n,
            "y": ctx.p.y,
            "gap": gap,
        }),
    )
}
