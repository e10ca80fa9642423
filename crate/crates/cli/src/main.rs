//! `cyclegen`: train coupled charge/discharge networks on battery cycling
//! CSVs and synthesize new cycles from them.
//!
//! Subcommands: `fixture`, `tune`, `train`, `generate`, `eval`, `plot`.
//! Every command takes `--config FILE` (key = value lines, flags win) and a
//! `--seed`; nothing reads the clock. `CYCLEGEN_LOG` controls verbosity.
//!
//! Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical
//! divergence.

mod commands;
mod common;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "cyclegen",
    version,
    about = "Coupled-network battery cycle synthesis"
)]
struct Cli {
    /// Key-value config file; command-line flags override it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a deterministic synthetic cycling dataset.
    Fixture(commands::fixture::FixtureArgs),
    /// Grid-search architectures on a small data slice.
    Tune(commands::tune::TuneArgs),
    /// Train the ChargeNet and DischargeNet for one parameter.
    Train(commands::train::TrainArgs),
    /// Chain a trained model pair into synthetic cycles.
    Generate(commands::generate::GenerateArgs),
    /// Per-cycle and aggregate error metrics on a test set.
    Eval(commands::eval::EvalArgs),
    /// Truth-vs-prediction overlay data and an SVG chart.
    Plot(commands::plot::PlotArgs),
}

/// Error carrying its process exit code.
#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub code: u8,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: 2,
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        CliError {
            message: message.into(),
            code: 3,
        }
    }
}

impl From<cyclegen_core::Error> for CliError {
    fn from(err: cyclegen_core::Error) -> Self {
        use cyclegen_core::Error as E;
        let code = match &err {
            E::InvalidArg(_) => 2,
            E::Diverged { .. } | E::NonFiniteGradient { .. } | E::AllCandidatesDiverged => 4,
            _ => 3,
        };
        CliError {
            message: err.to_string(),
            code,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("CYCLEGEN_LOG", "warn"))
        .init();
    let cli = Cli::parse();
    let file_config = match config::FileConfig::load(cli.config.as_deref()) {
        Ok(cfg) => cfg,
        Err(err) => {
            eprintln!("cyclegen: {err}");
            return ExitCode::from(err.code);
        }
    };
    let result = match cli.command {
        Command::Fixture(args) => commands::fixture::run(args, &file_config),
        Command::Tune(args) => commands::tune::run(args, &file_config),
        Command::Train(args) => commands::train::run(args, &file_config),
        Command::Generate(args) => commands::generate::run(args, &file_config),
        Command::Eval(args) => commands::eval::run(args, &file_config),
        Command::Plot(args) => commands::plot::run(args, &file_config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("cyclegen: {err}");
            ExitCode::from(err.code)
        }
    }
}
