//! `mzk`: run, check and verify the modified Zakharov-Kuznetsov solver
//! from a TOML configuration.
//!
//! Exit codes: 0 success, 1 configuration or usage error, 2 numerical
//! breakdown (divergence, failed linear solve), 3 hypotheses or
//! verification targets unmet.

mod commands;
mod config;
mod manifest;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use commands::Context;
use config::Config;

#[derive(Parser)]
#[command(name = "mzk", version, about = "Numerical lab for the modified Zakharov-Kuznetsov equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Master seed; overrides `output.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Write files only, print nothing on success.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Integrate to T and write snapshots, constants, bound checks and a checkpoint.
    Simulate,
    /// Evaluate the smallness hypotheses and decay constants for the initial data.
    CheckConstants,
    /// Sharp Steklov constants and the randomized interpolation inequality sweep.
    VerifyInequalities,
    /// Manufactured-solution convergence ladder.
    Convergence,
    /// Decay fits and bound margins over a sweep of amplitudes.
    DecayStudy,
}

fn run(cli: Cli) -> mzk_core::Result<commands::Outcome> {
    let path = cli
        .config
        .ok_or_else(|| mzk_core::Error::Usage("--config PATH is required".into()))?;
    let config = Config::load(&path)?;
    let ctx = Context {
        out: cli.out.unwrap_or_else(|| PathBuf::from(&config.output.dir)),
        seed: cli.seed.unwrap_or(config.output.seed),
        quiet: cli.quiet,
        config,
    };
    match cli.command {
        Command::Simulate => commands::simulate(&ctx),
        Command::CheckConstants => commands::check_constants(&ctx),
        Command::VerifyInequalities => commands::verify_inequalities(&ctx),
        Command::Convergence => commands::convergence(&ctx),
        Command::DecayStudy => commands::decay_study(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(outcome) => ExitCode::from(outcome.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::error_code(&e))
        }
    }
}
