//! Acceptance suite on the two-map fixture: one pass/fail line per criterion.
//!
//! Oracles here are computed independently of the library: closed forms,
//! hand values, and a brute-force walk over words with the fixture maps
//! written out by hand.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use ifs_ergodic::chain::{map_replicas, terminal_state, Starts};
use ifs_ergodic::clt::{
    char_fn, char_fn_gap, estimate_sigma2, mw_growth, normalized_sums, CharFnTable,
};
use ifs_ergodic::ergodic::{monotone_occupation_check, stability_gap, sync_gap_profile};
use ifs_ergodic::ifs::{
    calibrate, check_admissible, dual_apply_exact, regime, IntervalMap, DEFAULT_GRID_POINTS,
};
use ifs_ergodic::ks::{ks_statistic, ks_two_sample};
use ifs_ergodic::measure::{
    class_invariance_test, verify_boundary_mass, verify_escape_bound, verify_return_probability,
    BoundCheck, Side,
};
use ifs_ergodic::rng::derive_seed;
use ifs_ergodic::{Budget, EmpiricalMeasure, EvalPlan, IfsSystem, StreamSpec};

const SEED: u64 = 20_240_601;

/// Recorded value of the exact `W₁` at depth 12 from (0.3, 0.7).
const W1_DEPTH_12: f64 = 0.040_978_038_311_004_47;

/// Absolute slack for comparisons that are exact up to floating-point rounding.
const ROUNDING: f64 = 1e-12;

type Outcome = Result<(bool, String), ifs_ergodic::Error>;
type Criterion = (&'static str, fn() -> Outcome);

/// Fixture maps, independent of the library's map type.
fn f(symbol: usize, x: f64) -> f64 {
    match symbol {
        0 if x <= 0.8 => 0.5 * x,
        0 => 0.4 + 3.0 * (x - 0.8),
        _ if x <= 0.2 => 3.0 * x,
        _ => 0.6 + 0.5 * (x - 0.2),
    }
}

/// `E Σ_{j=1..n} φ(X_j)` from `y` by walking all `2^n` words.
fn brute_partial_sum(phi: fn(f64) -> f64, y: f64, n: usize) -> f64 {
    let mut total = 0.0;
    for word in 0u32..(1 << n) {
        let (mut x, mut s) = (y, 0.0);
        for j in 0..n {
            x = f(((word >> j) & 1) as usize, x);
            s += phi(x);
        }
        total += s;
    }
    total / (1u64 << n) as f64
}

fn centered(x: f64) -> f64 {
    x - 0.5
}

fn admissibility() -> Outcome {
    let t = Instant::now();
    let report = check_admissible(&IfsSystem::am2(), DEFAULT_GRID_POINTS);
    let secs = t.elapsed().as_secs_f64();
    let expected = 0.5 * 1.5f64.ln();
    let (e0, e1) = (
        (report.lyap0 - expected).abs(),
        (report.lyap1 - expected).abs(),
    );
    Ok((
        report.admissible && e0 <= 1e-12 && e1 <= 1e-12 && secs < 1.0,
        format!(
            "lyap0 err {e0:.1e}, lyap1 err {e1:.1e}, admissible {}, {secs:.3} s",
            report.admissible
        ),
    ))
}

fn calibration() -> Outcome {
    let am2 = IfsSystem::am2();
    let c05 = calibrate(&am2, 0.5)?;
    let c01 = calibrate(&am2, 0.1)?;
    let d05 = 1.0 - (0.5 * (2f64.powf(0.5) + 3f64.powf(-0.5))).powi(2);
    let d01 = 1.0 - (0.5 * (2f64.powf(0.1) + 3f64.powf(-0.1))).powi(10);
    let (e05, e01) = ((c05.delta_max - d05).abs(), (c01.delta_max - d01).abs());
    let leading = (0.0084..0.0085).contains(&d05);
    // Endpoint slopes read off the nodes.
    let slopes_ok = [
        (c05.lambda_lo.clone(), [0.5, 3.0]),
        (c05.lambda_hi.clone(), [3.0, 0.5]),
    ]
    .iter()
    .all(|(got, want)| got.iter().zip(want).all(|(g, w)| (g - w).abs() < 1e-12));

    let mut failures = 0usize;
    let points = 100_000;
    for c in [&c05, &c01] {
        for (i, map) in am2.maps().iter().enumerate() {
            let (lo, hi) = (c.lambda_lo[i], c.lambda_hi[i]);
            for j in 0..=points {
                let x = c.epsilon * j as f64 / points as f64;
                let tol = 1e-15;
                let ok = map.apply(x) >= lo * x - tol
                    && 1.0 - map.apply(1.0 - x) >= hi * x - tol
                    && map.apply_inverse(x) <= x / lo + tol
                    && map.apply_inverse(1.0 - x) >= 1.0 - x / hi - tol;
                failures += !ok as usize;
            }
        }
    }
    Ok((
        e05 <= 1e-10 && e01 <= 1e-10 && leading && slopes_ok && failures == 0,
        format!("δ_max(0.5) = {:.6} err {e05:.1e}, δ_max(0.1) = {:.6} err {e01:.1e}, scan failures {failures}", c05.delta_max, c01.delta_max),
    ))
}

fn dual_operator() -> Outcome {
    let am2 = IfsSystem::am2();
    let mut worst: f64 = 0.0;
    for n in 1..=12 {
        worst = worst.max((dual_apply_exact(&am2, |x| x, n, 0.5, Budget::default())? - 0.5).abs());
    }
    let mut constants_exact = true;
    for c in [0.7, -3.1, 1.0] {
        for x in [0.1, 0.3, 0.5, 0.9] {
            for n in [1, 5, 12] {
                constants_exact &= dual_apply_exact(&am2, |_| c, n, x, Budget::default())? == c;
            }
        }
    }
    Ok((
        worst <= 1e-12 && constants_exact,
        format!(
            "max |U^n id(½) − ½| = {worst:.1e} over n ≤ 12, constants exact: {constants_exact}"
        ),
    ))
}

fn class_invariance() -> Outcome {
    let am2 = IfsSystem::am2();
    let t = Instant::now();
    let consts = calibrate(&am2, 0.5)?;
    let report = class_invariance_test(
        &am2,
        &consts,
        &EmpiricalMeasure::dirac(0.5)?,
        10,
        Budget::default(),
    )?;
    let secs = t.elapsed().as_secs_f64();
    Ok((
        report.held() && report.atoms == 1024 && secs < 1.0,
        format!(
            "{} atoms, {} violations, {secs:.3} s",
            report.atoms,
            report.violations.len()
        ),
    ))
}

fn escape_bound() -> Outcome {
    let am2 = IfsSystem::am2();
    let exact = EvalPlan::exact();
    let c05 = calibrate(&am2, 0.5)?;
    let c01 = calibrate(&am2, 0.1)?;
    let headline = verify_escape_bound(&am2, &c05, 16, Side::Lower, &exact)?;
    let headline_ok = headline.estimate == 0.25
        && (headline.bound - 0.996).abs() < 5e-4
        && headline.status() == "satisfied";

    let mut checks: Vec<BoundCheck> = Vec::new();
    for consts in [&c05, &c01] {
        for n in 1..=20u64 {
            for side in [Side::Lower, Side::Upper] {
                checks.push(verify_escape_bound(&am2, consts, n, side, &exact)?);
            }
        }
        for k4 in 1..=12u64 {
            let n = k4.pow(4);
            let r = regime(consts, n)?;
            for k in r.k..=12 {
                for x in [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0] {
                    for side in [Side::Lower, Side::Upper] {
                        let far = match side {
                            Side::Lower => x >= r.eps_n,
                            Side::Upper => 1.0 - x >= r.eps_n,
                        };
                        if far {
                            checks.push(verify_boundary_mass(&am2, consts, n, k, x, side, &exact)?);
                        }
                    }
                }
            }
        }
    }
    for k4 in 1..=12u64 {
        checks.push(verify_return_probability(
            &am2,
            &c01,
            1e-9,
            k4.pow(4),
            &exact,
        )?);
    }
    let binding = checks.iter().filter(|c| !c.vacuous).count();
    let violated = checks.iter().filter(|c| c.status() == "violated").count();
    Ok((
        headline_ok && violated == 0,
        format!(
            "stay probability {} ≤ bound {:.4}; {} exact checks, {binding} non-vacuous, {violated} violated",
            headline.estimate,
            headline.bound,
            checks.len()
        ),
    ))
}

fn stability() -> Outcome {
    let am2 = IfsSystem::am2();
    let exact = EvalPlan::exact();
    let w1 = stability_gap(&am2, 0.3, 0.7, 1, &exact)?.value;
    let w12 = stability_gap(&am2, 0.3, 0.7, 12, &exact)?.value;
    let mc_plan = EvalPlan::mc(100_000, SEED);
    let (mut worst_z, mut shortfall_ok) = (f64::NEG_INFINITY, true);
    for n in 1..=10 {
        let e = stability_gap(&am2, 0.3, 0.7, n, &exact)?.value;
        let m = stability_gap(&am2, 0.3, 0.7, n, &mc_plan)?;
        // Coupled gap bounds W₁ from above: shortfall in standard errors.
        shortfall_ok &= e - m.value <= 3.0 * m.stderr + ROUNDING;
        if m.stderr > ROUNDING {
            worst_z = worst_z.max((e - m.value) / m.stderr);
        }
    }
    Ok((
        (w1 - 0.2).abs() <= 1e-12
            && w12 < w1
            && w12 < 0.05
            && (w12 - W1_DEPTH_12).abs() <= 1e-12
            && shortfall_ok,
        format!("W₁(1) = {w1}, W₁(12) = {w12}, worst coupled shortfall {worst_z:.2} se"),
    ))
}

fn synchronization() -> Outcome {
    let am2 = IfsSystem::am2();
    let exact = sync_gap_profile(&am2, 0.3, 0.7, 10, &EvalPlan::exact(), None)?;
    let monotone = exact.rows.windows(2).all(|w| w[1].value <= w[0].value);
    let q = exact.q_hat.unwrap_or(f64::NAN);
    let mc = sync_gap_profile(&am2, 0.3, 0.7, 10, &EvalPlan::mc(1_000_000, SEED), None)?;
    // Rows where every coupled gap is equal have a standard error at rounding
    // level, so agreement is judged with a floor of ROUNDING.
    let within = exact
        .rows
        .iter()
        .zip(&mc.rows)
        .all(|(e, m)| (e.value - m.value).abs() <= 3.0 * m.stderr + ROUNDING);
    let worst = exact
        .rows
        .iter()
        .zip(&mc.rows)
        .filter(|(_, m)| m.stderr > ROUNDING)
        .map(|(e, m)| (e.value - m.value).abs() / m.stderr)
        .fold(0.0, f64::max);
    Ok((
        monotone && q > 0.0 && q < 1.0 && within,
        format!("nonincreasing {monotone}, q̂ = {q:.4}, worst MC deviation {worst:.2} se (rows with spread)"),
    ))
}

fn occupation() -> Outcome {
    let am2 = IfsSystem::am2();
    let mut total = 0;
    let mut parts = Vec::new();
    for (i, (x, y, xi)) in [(0.1, 0.9, 0.5), (0.3, 0.7, 0.2), (0.45, 0.55, 0.8)]
        .into_iter()
        .enumerate()
    {
        let r = monotone_occupation_check(&am2, x, y, xi, 1000, 1000, SEED + i as u64)?;
        total += r.violations;
        parts.push(format!("({x}, {y}, {xi}): {}", r.violations));
    }
    Ok((total == 0, format!("violations {}", parts.join(", "))))
}

fn central_limit() -> Outcome {
    let am2 = IfsSystem::am2();
    let t = Instant::now();
    let (n, replicas) = (10_000, 10_000);
    // The fixture is symmetric under x ↦ 1 − x, so x − ½ has invariant mean 0.
    let sums = |start: Starts, tag: &str| {
        normalized_sums(
            &am2,
            centered,
            0.0,
            &start,
            n,
            replicas,
            derive_seed(SEED, tag),
        )
    };
    let a = sums(Starts::Point(0.3), "clt-0.3")?;
    let b = sums(Starts::Point(0.7), "clt-0.7")?;
    let s = sums(
        Starts::Stationary {
            n_burn: 10_000,
            seed: derive_seed(SEED, "clt-burn"),
        },
        "clt-stationary",
    )?;
    let two = ks_two_sample(&a, &b)?;
    let va = estimate_sigma2(&a)?.value;
    let vb = estimate_sigma2(&b)?.value;
    let vs = estimate_sigma2(&s)?.value;
    let one = ks_statistic(&a, va.sqrt())?;
    let spread = [(va, vb), (va, vs), (vb, vs)]
        .iter()
        .map(|(u, v)| (u - v).abs() / u.min(*v))
        .fold(0.0, f64::max);
    let secs = t.elapsed().as_secs_f64();
    Ok((
        two.statistic <= 0.03 && one.p_value >= 0.01 && spread <= 0.10 && secs < 300.0,
        format!(
            "two-sample D = {:.4}, one-sample p = {:.3}, σ̂² = {va:.3}/{vb:.3}/{vs:.3} (spread {:.1}%), {secs:.1} s",
            two.statistic,
            one.p_value,
            100.0 * spread
        ),
    ))
}

fn t_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 * 0.5).collect()
}

fn char_tables(n: usize, replicas: usize) -> ifs_ergodic::Result<(CharFnTable, CharFnTable)> {
    let am2 = IfsSystem::am2();
    let grid = t_grid();
    let table = |x: f64, tag: &str| {
        let plan = EvalPlan::mc(replicas, derive_seed(SEED, tag));
        char_fn(&am2, centered, 0.0, &Starts::Point(x), n, &grid, &plan)
    };
    Ok((table(0.3, "cf-0.3")?, table(0.7, "cf-0.7")?))
}

fn characteristic_function() -> Outcome {
    let am2 = IfsSystem::am2();
    let mut gaps = Vec::new();
    for n in [100, 1_000, 10_000] {
        let (a, b) = char_tables(n, 100_000)?;
        gaps.push(char_fn_gap(&a, &b)?);
    }
    let decreasing = gaps.windows(2).all(|w| w[1].sup < w[0].sup);
    let last = gaps[2];
    let small = last.sup <= 0.05 + 3.0 * last.stderr;
    let exact = char_fn(
        &am2,
        centered,
        0.0,
        &Starts::Point(0.5),
        1,
        &t_grid(),
        &EvalPlan::exact(),
    )?;
    let cos_err = exact
        .t
        .iter()
        .enumerate()
        .map(|(i, &t)| (exact.re[i] - (t / 4.0).cos()).abs().max(exact.im[i].abs()))
        .fold(0.0, f64::max);
    Ok((
        decreasing && small && cos_err <= 1e-12,
        format!(
            "sup gaps {} (last ± {:.4}), one-step error vs cos(t/4) {cos_err:.1e}",
            gaps.iter()
                .map(|g| format!("{:.4}", g.sup))
                .collect::<Vec<_>>()
                .join(" > "),
            last.stderr
        ),
    ))
}

fn growth() -> Outcome {
    let am2 = IfsSystem::am2();
    let burn_seed = derive_seed(SEED, "mw-reference");
    let ys = map_replicas(400, |r| {
        terminal_state(
            &am2,
            0.5,
            10_000,
            &mut StreamSpec::new(burn_seed, r).generator(),
        )
    })?;

    let small: Vec<usize> = (1..=10).collect();
    let exact = mw_growth(&am2, centered, &small, &ys[..50], 0, &EvalPlan::exact())?;
    let mut worst: f64 = 0.0;
    for (row, &n) in exact.rows.iter().zip(&small) {
        let mean_sq = ys[..50]
            .iter()
            .map(|&y| brute_partial_sum(centered, y, n).powi(2))
            .sum::<f64>()
            / 50.0;
        worst = worst.max((row.norm - mean_sq.sqrt()).abs());
    }

    let plan = EvalPlan::mc(2_000, derive_seed(SEED, "mw"));
    let report = mw_growth(&am2, centered, &[64, 128, 256, 512], &ys, 2_000, &plan)?;
    let exponent = report.exponent.unwrap_or(f64::NAN);
    let se = report.exponent_stderr.unwrap_or(f64::NAN);
    Ok((
        worst <= 1e-12 && exponent <= 0.5,
        format!(
            "exact vs brute force {worst:.1e}; norms {}; exponent {exponent:.3} ± {se:.3}",
            report
                .rows
                .iter()
                .map(|r| format!("{:.2}", r.norm))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    ))
}

fn bits(xs: &[f64]) -> Vec<u64> {
    xs.iter().map(|v| v.to_bits()).collect()
}

fn data_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .expect("run directory")
        .map(|e| e.expect("entry").path())
        .filter(|p| p.file_name().is_some_and(|n| n != "timestamp.json"))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect()
}

fn determinism() -> Outcome {
    // Library level: the same computations under pools of 1 and 4 threads.
    let fingerprint = || -> ifs_ergodic::Result<Vec<u64>> {
        let am2 = IfsSystem::am2();
        let (a, b) = char_tables(1_000, 20_000)?;
        let sync = sync_gap_profile(&am2, 0.3, 0.7, 10, &EvalPlan::mc(100_000, SEED), None)?;
        let sums = normalized_sums(&am2, centered, 0.0, &Starts::Point(0.3), 1_000, 5_000, SEED)?;
        let mut out = bits(&a.re);
        out.extend(bits(&b.im));
        out.extend(bits(&sync.rows.iter().map(|r| r.value).collect::<Vec<_>>()));
        out.extend(bits(&sums));
        Ok(out)
    };
    let in_pool = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("thread pool")
            .install(fingerprint)
    };
    let library_same = in_pool(1)? == in_pool(4)?;

    // Command line: full run directories at 1 and 4 threads.
    let tmp = std::env::temp_dir().join(format!("ifs-ergodic-acceptance-{}", std::process::id()));
    let runs: &[&[&str]] = &[
        &["sync", "--mode", "mc", "-R", "100000"],
        &[
            "clt", "charfn", "--n", "1000", "-R", "20000", "--y", "0.7", "--center", "0",
        ],
        &[
            "clt",
            "ks",
            "--n",
            "1000",
            "-R",
            "5000",
            "--y",
            "0.7",
            "--burn-replicas",
            "2000",
        ],
        &[
            "clt",
            "mw",
            "--n-list",
            "16,32,64",
            "--y-samples",
            "60",
            "--inner-replicas",
            "200",
        ],
    ];
    let mut cli_same = true;
    for (i, args) in runs.iter().enumerate() {
        let mut files = Vec::new();
        for threads in ["1", "4"] {
            let out = tmp.join(format!("run{i}-t{threads}"));
            let status = Command::new(env!("CARGO_BIN_EXE_ifs-ergodic"))
                .args(*args)
                .args(["--seed", "77", "--threads", threads, "--out"])
                .arg(&out)
                .output()
                .expect("binary runs");
            cli_same &= status.status.success();
            files.push(data_files(&out));
        }
        cli_same &= files[0] == files[1] && !files[0].is_empty();
    }
    let _ = std::fs::remove_dir_all(&tmp);
    Ok((
        library_same && cli_same,
        format!(
            "library bits identical: {library_same}; {} CLI runs byte-identical: {cli_same}",
            runs.len()
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("admissibility", admissibility),
        ("calibration closed forms", calibration),
        ("dual operator oracle", dual_operator),
        ("tail class invariance", class_invariance),
        ("escape and boundary bounds", escape_bound),
        ("stability in W1", stability),
        ("synchronization profile", synchronization),
        ("monotone occupation", occupation),
        ("central limit", central_limit),
        ("characteristic function gap", characteristic_function),
        ("dual partial-sum growth", growth),
        ("thread-count determinism", determinism),
    ];
    let mut passed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let (ok, detail) = match check() {
            Ok(outcome) => outcome,
            Err(e) => (false, format!("error: {e}")),
        };
        passed += ok as usize;
        println!(
            "criterion {:>2} {} {name}: {detail} [{:.1} s]",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            t.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
    if passed == criteria.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
