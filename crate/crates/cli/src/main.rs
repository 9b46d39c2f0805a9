//! `arrival-ic`: configuration-driven experiments for weighted regret and
//! incentive compatibility under arrival-time uncertainty.
//!
//! Exit codes: 0 success, 1 a check failed, 2 configuration or runtime error.

mod commands;
mod config;
mod error;
mod output;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Verdict;
use config::ExperimentConfig;
use error::CliError;
use output::OutDir;

#[derive(Parser)]
#[command(name = "arrival-ic", version, about = "Weighted-regret and incentive-compatibility experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: available cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output directory; overrides the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Weighted regrets of compliant runs.
    Regret,
    /// Conditional deviation gains against the `ε` bound.
    IcCheck,
    /// Closed-form bounds at a point or over a grid.
    Bounds,
    /// Interval-regret profile.
    Adaptive,
    /// Fast computations against exhaustive oracles.
    OracleCheck,
}

fn run(cli: &Cli) -> Result<Verdict, CliError> {
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(CliError::Config("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().map_err(CliError::run)?;
    }
    let mut cfg = match (&cli.config, cli.command) {
        (Some(path), _) => config::load(path)?,
        (None, Command::OracleCheck) => config::parse("{}")?,
        (None, _) => return Err(CliError::Config("--config is required".into())),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = OutDir::create(cfg.out_dir(cli.out.as_deref()))?;
    dispatch(cli.command, &cfg, &out)
}

fn dispatch(command: Command, cfg: &ExperimentConfig, out: &OutDir) -> Result<Verdict, CliError> {
    match command {
        Command::Regret => commands::regret::run(cfg, out),
        Command::IcCheck => commands::ic_check::run(cfg, out),
        Command::Bounds => commands::bounds::run(cfg, out),
        Command::Adaptive => commands::adaptive::run(cfg, out),
        Command::OracleCheck => commands::oracle_check::run(cfg, out),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Verdict::Ok) => ExitCode::SUCCESS,
        Ok(Verdict::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("arrival-ic: {e}");
            ExitCode::from(2)
        }
    }
}
