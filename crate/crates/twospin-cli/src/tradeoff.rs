//! The `tradeoff` subcommand: detection-vs-correction resource tables.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use twospin::analysis::{tradeoff, TradeoffModel};

use crate::error::CliError;
use crate::run::fmt_f64;

/// Arguments of `twospin tradeoff`.
#[derive(Debug, Args)]
pub struct TradeoffArgs {
    /// Lowest tabulated error probability.
    #[arg(long, default_value_t = 0.0)]
    pub p_min: f64,
    /// Highest tabulated error probability.
    #[arg(long, default_value_t = 0.3)]
    pub p_max: f64,
    /// Number of tabulated p values (0 writes a header-only table).
    #[arg(long, default_value_t = 61)]
    pub p_steps: usize,
    /// Per-gate error probability for the gate-cost model.
    #[arg(long, default_value_t = 0.01)]
    pub p_g: f64,
    /// Error probability to mark in the figure (the experimental maximum).
    #[arg(long, default_value_t = 0.269)]
    pub mark_p: f64,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

/// One tabulated point as persisted in `tradeoff.csv`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub model: String,
    pub p: f64,
    pub detection_signal: f64,
    pub correction_signal: f64,
    pub detection_fidelity: f64,
    pub correction_fidelity: f64,
    pub detection_figure: f64,
    pub correction_figure: f64,
    pub crossover_p: f64,
}

const HEADER: [&str; 9] = [
    "model",
    "p",
    "detection_signal",
    "correction_signal",
    "detection_fidelity",
    "correction_fidelity",
    "detection_figure",
    "correction_figure",
    "crossover_p",
];

/// All three models, in output order.
pub const MODELS: [TradeoffModel; 3] = [
    TradeoffModel::Pool,
    TradeoffModel::GateCost,
    TradeoffModel::Signal2m,
];

/// Tabulate the three tradeoff models and persist CSV + figure.
pub fn cmd_tradeoff(args: &TradeoffArgs) -> Result<(), CliError> {
    for (value, field) in [
        (args.p_min, "--p-min"),
        (args.p_max, "--p-max"),
        (args.mark_p, "--mark-p"),
    ] {
        if !(value.is_finite() && (0.0..=0.5).contains(&value)) {
            return Err(CliError::Config(format!(
                "{field} must lie in [0, 0.5], got {value}"
            )));
        }
    }
    if args.p_min > args.p_max {
        return Err(CliError::Config(format!(
            "--p-min ({}) must not exceed --p-max ({})",
            args.p_min, args.p_max
        )));
    }
    if !(args.p_g.is_finite() && (0.0..0.5).contains(&args.p_g)) {
        return Err(CliError::Config(format!(
            "--p-g must lie in [0, 0.5), got {}",
            args.p_g
        )));
    }
    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::io(&args.out_dir, e))?;

    let grid: Vec<f64> = match args.p_steps {
        0 => Vec::new(),
        1 => vec![args.p_min],
        n => (0..n)
            .map(|k| args.p_min + k as f64 * (args.p_max - args.p_min) / (n - 1) as f64)
            .collect(),
    };

    let mut rows: Vec<TradeoffRow> = Vec::with_capacity(3 * grid.len());
    for model in MODELS {
        for &p in &grid {
            let report = tradeoff(p, args.p_g, model);
            rows.push(TradeoffRow {
                model: model.to_string(),
                p,
                detection_signal: report.detection_signal,
                correction_signal: report.correction_signal,
                detection_fidelity: report.detection_fidelity,
                correction_fidelity: report.correction_fidelity,
                detection_figure: report.detection_figure(),
                correction_figure: report.correction_figure(),
                crossover_p: report.crossover_p,
            });
        }
    }

    let csv_path = args.out_dir.join("tradeoff.csv");
    write_tradeoff(&csv_path, &rows)?;
    println!("wrote {}", csv_path.display());

    for model in MODELS {
        let report = tradeoff(args.p_min.min(args.p_max), args.p_g, model);
        println!("  {model}: crossover p* = {:.12}", report.crossover_p);
    }

    if rows.is_empty() {
        println!("empty p range; skipped the figure");
        return Ok(());
    }

    let fig = crate::plot::flows_figure(&rows, Some(args.mark_p));
    let svg_path = args.out_dir.join("tradeoff.svg");
    std::fs::write(&svg_path, fig.render()).map_err(|e| CliError::io(&svg_path, e))?;
    println!("wrote {}", svg_path.display());
    Ok(())
}

fn write_tradeoff(path: &Path, rows: &[TradeoffRow]) -> Result<(), CliError> {
    let mut wtr = csv::Writer::from_path(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    wtr.write_record(HEADER)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    for r in rows {
        wtr.write_record([
            r.model.as_str(),
            &fmt_f64(r.p),
            &fmt_f64(r.detection_signal),
            &fmt_f64(r.correction_signal),
            &fmt_f64(r.detection_fidelity),
            &fmt_f64(r.correction_fidelity),
            &fmt_f64(r.detection_figure),
            &fmt_f64(r.correction_figure),
            &fmt_f64(r.crossover_p),
        ])
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }
    wtr.flush().map_err(|e| CliError::io(path, e))
}

/// Read a `tradeoff.csv` produced by `cmd_tradeoff`.
pub fn read_tradeoff(path: &Path) -> Result<Vec<TradeoffRow>, CliError> {
    if !path.is_file() {
        return Err(CliError::Config(format!(
            "no tradeoff table at {}; run `twospin tradeoff` first",
            path.display()
        )));
    }
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let rows: Result<Vec<TradeoffRow>, csv::Error> = rdr.deserialize().collect();
    let rows = rows.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if rows.is_empty() {
        return Err(CliError::Config(format!(
            "{} holds no data rows",
            path.display()
        )));
    }
    Ok(rows)
}
