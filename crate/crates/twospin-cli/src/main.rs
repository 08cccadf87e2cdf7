//! `twospin` — deterministic simulator and analysis toolkit for a two-spin
//! phase-error detection experiment.
//!
//! Subcommands:
//! - `run`: execute the (θ, t_d, mode) sweep from a config and persist
//!   trials, fits, the resolved config, and a manifest.
//! - `plot`: render a static SVG figure from persisted results.
//! - `tomography`: reconstruct a pipeline stage's deviation density matrix.
//! - `tradeoff`: tabulate detection-vs-correction resource models.
//!
//! Exit codes: 0 on success, 2 for configuration or input errors, 3 for
//! numeric failures, 1 otherwise.

mod args;
mod config;
mod error;
mod plot;
mod run;
mod svg;
mod tomography;
mod tradeoff;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "twospin",
    version,
    about = "Two-spin phase-error detection experiment: simulator and analysis toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Execute the sweep described by a config and write CSV outputs.
    Run(run::RunArgs),
    /// Render a figure from persisted run results.
    Plot(plot::PlotArgs),
    /// Reconstruct a simulated pipeline stage by state tomography.
    Tomography(tomography::TomographyArgs),
    /// Tabulate detection-vs-correction tradeoff models.
    Tradeoff(tradeoff::TradeoffArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<(), CliError> = match &cli.command {
        Command::Run(a) => run::cmd_run(a),
        Command::Plot(a) => plot::cmd_plot(a),
        Command::Tomography(a) => tomography::cmd_tomography(a),
        Command::Tradeoff(a) => tradeoff::cmd_tradeoff(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
