//! `ifs-ergodic`: batch runs of the ifs-ergodic library.
//!
//! Every run writes into one output directory: JSON reports tagged with
//! `"schema": "ifs-ergodic/1"`, CSV tables, a `manifest.json` with the config
//! hash, seed and versions, and a `timestamp.json` holding the only
//! wall-clock data. Exit status is 0 on success, 1 for invalid input, 2 when
//! an exact enumeration exceeds the budget and 3 when an internal invariant
//! breaks.

mod commands;
mod config;
mod error;
mod observable;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::SystemTime;

use clap::{Parser, Subcommand};
use ifs_ergodic::{Budget, Mode};

use commands::Action;
use config::{FileConfig, Params, RunConfig, BUILTIN_AM2, DEFAULT_OUT, DEFAULT_SEED};
use error::{CliError, CliResult};
use output::RunDir;

#[derive(Debug, Parser)]
#[command(
    name = "ifs-ergodic",
    version,
    about = "Simulate and check random iterated function systems on [0, 1]"
)]
struct Cli {
    /// TOML config; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// System definition JSON, or `am2` for the built-in fixture.
    #[arg(long, global = true)]
    system: Option<String>,

    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// exact, mc or auto.
    #[arg(long, global = true)]
    mode: Option<Mode>,

    /// Largest number of words an exact enumeration may visit.
    #[arg(long, global = true)]
    budget: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Crossing condition and endpoint Lyapunov exponents.
    Admissible(Params),
    /// Tail-bound constants for `--alpha`, with an optional `--alphas` sweep.
    Calibrate(Params),
    /// One trajectory dump plus ensemble terminal states.
    Simulate(Params),
    /// `W₁(Pⁿδ_x, Pⁿδ_y)` ladder.
    Stability(Params),
    /// Expected coupled gap profile and fitted decay rate.
    Sync(Params),
    /// Tail-bound checks.
    Bounds {
        #[command(subcommand)]
        which: BoundsCommand,
    },
    /// Ergodic averages and dual-operator convergence.
    Ergodic {
        #[command(subcommand)]
        which: ErgodicCommand,
    },
    /// Central limit diagnostics.
    Clt {
        #[command(subcommand)]
        which: CltCommand,
    },
}

#[derive(Debug, Subcommand)]
enum BoundsCommand {
    /// Probability of staying near an endpoint for `n` steps.
    Escape(Params),
    /// Mass near an endpoint after `k` steps.
    Boundary(Params),
    /// Probability of returning to `[a, 1 − a]`.
    Return(Params),
}

#[derive(Debug, Subcommand)]
enum ErgodicCommand {
    /// Time averages along independent trajectories.
    Birkhoff(Params),
    /// Grid sup of Cesàro means of the dual operator.
    Cesaro(Params),
    /// Distance of `Uⁿφ` from the invariant mean.
    Dual(Params),
}

#[derive(Debug, Subcommand)]
enum CltCommand {
    /// Normalized sums and variance.
    Sums(Params),
    /// Normality and two-start KS tests.
    Ks(Params),
    /// Growth of partial sums of the dual operator.
    Mw(Params),
    /// Characteristic function table and optional two-start gap.
    Charfn(Params),
}

impl Command {
    fn split(self) -> (Action, Params) {
        match self {
            Command::Admissible(p) => (Action::Admissible, p),
            Command::Calibrate(p) => (Action::Calibrate, p),
            Command::Simulate(p) => (Action::Simulate, p),
            Command::Stability(p) => (Action::Stability, p),
            Command::Sync(p) => (Action::Sync, p),
            Command::Bounds { which } => match which {
                BoundsCommand::Escape(p) => (Action::BoundsEscape, p),
                BoundsCommand::Boundary(p) => (Action::BoundsBoundary, p),
                BoundsCommand::Return(p) => (Action::BoundsReturn, p),
            },
            Command::Ergodic { which } => match which {
                ErgodicCommand::Birkhoff(p) => (Action::ErgodicBirkhoff, p),
                ErgodicCommand::Cesaro(p) => (Action::ErgodicCesaro, p),
                ErgodicCommand::Dual(p) => (Action::ErgodicDual, p),
            },
            Command::Clt { which } => match which {
                CltCommand::Sums(p) => (Action::CltSums, p),
                CltCommand::Ks(p) => (Action::CltKs, p),
                CltCommand::Mw(p) => (Action::CltMw, p),
                CltCommand::Charfn(p) => (Action::CltCharfn, p),
            },
        }
    }
}

/// Merges flags over the config file and validates the result.
fn resolve(cli: Cli) -> CliResult<(Action, RunConfig)> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let command = match (cli.command, &file.command) {
        (Some(c), _) => c,
        (None, Some(words)) => {
            let argv = std::iter::once("ifs-ergodic").chain(words.split_whitespace());
            Cli::try_parse_from(argv)
                .map_err(|e| CliError::Config {
                    path: cli.config.clone().unwrap_or_default(),
                    message: format!("command {words:?}: {}", e.kind()),
                })?
                .command
                .ok_or_else(|| CliError::Usage("config command names no subcommand".into()))?
        }
        (None, None) => return Err(CliError::Usage("no subcommand given; see --help".into())),
    };
    let (action, flags) = command.split();
    let config = RunConfig {
        command: action.name().to_string(),
        system: cli
            .system
            .or(file.system)
            .unwrap_or_else(|| BUILTIN_AM2.to_string()),
        seed: cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        mode: cli.mode.or(file.mode).unwrap_or(Mode::Auto),
        budget: cli.budget.or(file.budget).unwrap_or(Budget::default().0),
        params: flags.or(file.params),
        threads: cli.threads.or(file.threads),
        out: cli
            .out
            .or(file.out)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
    };
    config.validate()?;
    Ok((action, config))
}

fn run(cli: Cli) -> CliResult<PathBuf> {
    let started = SystemTime::now();
    let (action, config) = resolve(cli)?;
    if let Some(threads) = config.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start {threads} threads: {e}")))?;
    }
    let system = config.load_system()?;
    let system_json = system.to_json_pretty();
    let mut out = RunDir::create(&config.out, action.name())?;
    commands::execute(action, &config, system, &mut out)?;
    out.finish(&config, &system_json, started)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version.
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
