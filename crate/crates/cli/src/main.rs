//! `superhedge`: batch runs of the pricing engine from a JSON config.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid config, 3 numerical
//! failure, 4 contract violation (a check ran and failed).

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::Context;
use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::RunDir;

#[derive(Parser)]
#[command(name = "superhedge", version, about = "Super-replication prices, bounds and hedge checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment config (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; defaults to the number of CPUs.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Overrides the config tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Primal and dual prices on the configured tree.
    Price,
    /// Lower and upper bounds over an epsilon sweep.
    Bounds,
    /// Bounds sweep that also requires the corrections to shrink with epsilon.
    Converge,
    /// Doubling and lifted hedges on sampled paths.
    HedgeVerify,
    /// Regularity, spread and no-arbitrage checks on the inputs.
    CheckAssumptions,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::Price => "price",
            Self::Bounds => "bounds",
            Self::Converge => "converge",
            Self::HedgeVerify => "hedge-verify",
            Self::CheckAssumptions => "check-assumptions",
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let path = cli.config.as_ref().ok_or_else(|| CliError::Config("--config is required".into()))?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let config = ExperimentConfig::parse(&text)?;
    let seed = cli.seed.unwrap_or(config.seed);
    let tolerance = cli.tol.unwrap_or(config.tolerance);
    if !(tolerance > 0.0 && tolerance.is_finite()) {
        return Err(CliError::Config(format!("tolerance must be positive, got {tolerance}")));
    }
    let workers = cli.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(CliError::Config("--workers must be at least 1".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build().map_err(CliError::numerical)?;

    let solver = config.solver();
    let ctx = Context { config, solver, seed, tolerance };
    let mut dir = RunDir::create(&cli.out, cli.command.name(), &text, seed, tolerance)?;
    let ok = pool.install(|| match cli.command {
        Command::Price => commands::price(&ctx, &mut dir),
        Command::Bounds => commands::bounds(&ctx, &mut dir, false),
        Command::Converge => commands::bounds(&ctx, &mut dir, true),
        Command::HedgeVerify => commands::hedge_verify(&ctx, &mut dir),
        Command::CheckAssumptions => commands::check_assumptions(&ctx, &mut dir),
    })?;
    dir.finish(if ok { "pass" } else { "fail" }, workers)?;
    if ok {
        Ok(())
    } else {
        Err(CliError::Contract(format!("{} checks failed; see {}", cli.command.name(), cli.out.display())))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("superhedge: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
