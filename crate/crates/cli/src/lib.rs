//! Command-line front end for `levelfit`.

pub mod commands;
pub mod error;
pub mod ingest;
pub mod settings;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use error::{exit, CliError, Result};
pub use ingest::{ingest_points, parse_points, IngestError};
pub use settings::{parse_box, Settings};

/// Fit small-volume polynomial superlevel sets {p >= 1} around point clouds.
///
/// Exit codes: 0 success, 2 usage, 3 input data, 4 solver, 5 verification, 6 output.
#[derive(Debug, Parser)]
#[command(name = "levelfit", version)]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug)
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one degree and write coeffs.json and report.json
    Fit(#[command(flatten)] Settings),
    /// Fit several degrees and write sweep.csv
    Sweep(#[command(flatten)] Settings),
    /// Evaluate a polynomial on a grid and write plot.csv
    Plotdata {
        /// Polynomial JSON to plot instead of fitting one
        #[arg(long, value_name = "PATH")]
        coeffs: Option<PathBuf>,
        #[command(flatten)]
        settings: Settings,
    },
    /// Write the fitting LP as problem.mps
    ExportMps(#[command(flatten)] Settings),
    /// Verify a stored polynomial and write report.json
    Verify {
        /// Polynomial JSON, as written by `fit`
        #[arg(long, value_name = "PATH")]
        coeffs: PathBuf,
        #[command(flatten)]
        settings: Settings,
    },
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Fit(s) => commands::cmd_fit(&s.resolve()?).map(drop),
        Command::Sweep(s) => commands::cmd_sweep(&s.resolve()?).map(drop),
        Command::Plotdata { coeffs, settings } => {
            commands::cmd_plotdata(&settings.resolve()?, coeffs.as_deref()).map(drop)
        }
        Command::ExportMps(s) => commands::cmd_export_mps(&s.resolve()?).map(drop),
        Command::Verify { coeffs, settings } => commands::cmd_verify(&settings.resolve()?, &coeffs).map(drop),
    }
}
