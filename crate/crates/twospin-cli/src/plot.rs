//! The `plot` subcommand: static SVG figures from persisted run results.

use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, ValueEnum};

use crate::args::{ModeArg, NoiseArg};
use crate::error::CliError;
use crate::run::{read_fits, read_trials, FitRow, TrialRow};
use crate::svg::{color, Figure};
use crate::tradeoff::{read_tradeoff, TradeoffRow};

/// Figures `twospin plot` can render.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FigureKind {
    /// Accepted output states in the x̂ẑ plane, one ellipse per storage time.
    #[value(name = "bloch_ellipses")]
    BlochEllipses,
    /// Fitted ellipticity against storage time.
    #[value(name = "ellipticity_vs_t")]
    EllipticityVsT,
    /// Coded against control inferred error probability.
    #[value(name = "p_vs_p")]
    PVsP,
    /// Inferred fidelities against storage time.
    #[value(name = "fidelity_vs_t")]
    FidelityVsT,
    /// Tradeoff figures of merit against error probability.
    #[value(name = "flows")]
    Flows,
}

impl FigureKind {
    fn file_stem(self) -> &'static str {
        match self {
            FigureKind::BlochEllipses => "bloch_ellipses",
            FigureKind::EllipticityVsT => "ellipticity_vs_t",
            FigureKind::PVsP => "p_vs_p",
            FigureKind::FidelityVsT => "fidelity_vs_t",
            FigureKind::Flows => "flows",
        }
    }
}

/// Arguments of `twospin plot`.
#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Figure to render.
    #[arg(value_enum)]
    pub figure: FigureKind,
    /// Directory holding run outputs.
    #[arg(long, default_value = "out")]
    pub results: PathBuf,
    /// Output SVG path (default: <results>/<figure>.svg).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Noise pass to draw (bloch_ellipses only).
    #[arg(long, value_enum, default_value_t = NoiseArg::Ideal)]
    pub noise: NoiseArg,
    /// Mode to draw (bloch_ellipses only).
    #[arg(long, value_enum, default_value_t = ModeArg::Control)]
    pub mode: ModeArg,
}

/// Render the requested figure from persisted results.
pub fn cmd_plot(args: &PlotArgs) -> Result<(), CliError> {
    let fig = match args.figure {
        FigureKind::BlochEllipses => {
            let trials = read_trials(&args.results.join("trials.csv"))?;
            bloch_ellipses_figure(&trials, args.noise, args.mode)?
        }
        FigureKind::EllipticityVsT => {
            let fits = read_fits(&args.results.join("fits.csv"))?;
            ellipticity_figure(&fits)
        }
        FigureKind::FidelityVsT => {
            let fits = read_fits(&args.results.join("fits.csv"))?;
            fidelity_figure(&fits)
        }
        FigureKind::PVsP => {
            let fits = read_fits(&args.results.join("fits.csv"))?;
            p_vs_p_figure(&fits)?
        }
        FigureKind::Flows => {
            let rows = read_tradeoff(&args.results.join("tradeoff.csv"))?;
            flows_figure(&rows, None)
        }
    };
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| args.results.join(format!("{}.svg", args.figure.file_stem())));
    std::fs::write(&out, fig.render()).map_err(|e| CliError::io(&out, e))?;
    println!("wrote {}", out.display());
    Ok(())
}

/// Keys of a fit/trial group, in file order.
fn group_labels(rows: &[(String, String)]) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    for key in rows {
        if !out.contains(key) {
            out.push(key.clone());
        }
    }
    out
}

fn bloch_ellipses_figure(
    trials: &[TrialRow],
    noise: NoiseArg,
    mode: ModeArg,
) -> Result<Figure, CliError> {
    let noise_label = crate::config::NoiseVariant::from(noise).label();
    let mode_label = twospin::experiment::Mode::from(mode).to_string();
    let family: Vec<&TrialRow> = trials
        .iter()
        .filter(|r| r.noise == noise_label && r.mode == mode_label)
        .collect();
    if family.is_empty() {
        return Err(CliError::Config(format!(
            "no rows for noise={noise_label} mode={mode_label} in trials.csv"
        )));
    }
    // Storage times in file order (the writer sorts them ascending).
    let mut times: Vec<f64> = Vec::new();
    for r in &family {
        if !times.contains(&r.t_d) {
            times.push(r.t_d);
        }
    }
    // Normalize to the θ = 0 amplitude at the shortest storage time so the
    // least-damped trace is the unit semicircle.
    let norm = family
        .iter()
        .find(|r| r.t_d == times[0] && r.theta.abs() < 1e-9)
        .map(|r| r.z_accepted.hypot(r.x_accepted))
        .filter(|&a| a > 0.0)
        .ok_or_else(|| {
            CliError::Config("trials.csv lacks a usable θ = 0 reference row".into())
        })?;

    let mut fig = Figure::new_equal_aspect(
        &format!("Accepted output states ({noise_label}, {mode_label})"),
        "z (normalized)",
        "x (normalized)",
        (-1.1, 1.1),
        (-0.08, 1.15),
    );
    let semicircle: Vec<(f64, f64)> = (0..=180)
        .map(|d| {
            let t = d as f64 * PI / 180.0;
            (t.cos(), t.sin())
        })
        .collect();
    fig.line(&semicircle, Some("unit semicircle"), "#555555", true);
    for (i, &t_d) in times.iter().enumerate() {
        let pts: Vec<(f64, f64)> = family
            .iter()
            .filter(|r| r.t_d == t_d)
            .map(|r| (r.z_accepted / norm, r.x_accepted / norm))
            .collect();
        let label = format!("t_d = {t_d:.3} s");
        fig.line(&pts, Some(&label), color(i), false);
        fig.markers(&pts, None, color(i));
    }
    Ok(fig)
}

fn series_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() || !hi.is_finite() {
        return (0.0, 1.0);
    }
    let pad = 0.08 * (hi - lo).max(1e-6);
    (lo - pad, hi + pad)
}

fn ellipticity_figure(fits: &[FitRow]) -> Figure {
    let keys = group_labels(
        &fits
            .iter()
            .map(|r| (r.noise.clone(), r.mode.clone()))
            .collect::<Vec<_>>(),
    );
    let x_range = series_range(fits.iter().map(|r| r.t_d));
    let y_range = series_range(fits.iter().map(|r| r.eps));
    let mut fig = Figure::new(
        "Ellipticity vs storage time",
        "storage time t_d (s)",
        "ellipticity",
        x_range,
        y_range,
    );
    for (i, (noise, mode)) in keys.iter().enumerate() {
        let pts: Vec<(f64, f64)> = fits
            .iter()
            .filter(|r| &r.noise == noise && &r.mode == mode)
            .map(|r| (r.t_d, r.eps))
            .collect();
        let label = format!("{noise} {mode}");
        fig.line(&pts, Some(&label), color(i), false);
        fig.markers(&pts, None, color(i));
    }
    fig
}

fn fidelity_figure(fits: &[FitRow]) -> Figure {
    let keys = group_labels(
        &fits
            .iter()
            .map(|r| (r.noise.clone(), r.mode.clone()))
            .collect::<Vec<_>>(),
    );
    let x_range = series_range(fits.iter().map(|r| r.t_d));
    let y_range = series_range(fits.iter().flat_map(|r| [r.f_eps, r.f_delta]));
    let mut fig = Figure::new(
        "Inferred fidelity vs storage time",
        "storage time t_d (s)",
        "fidelity",
        x_range,
        y_range,
    );
    for (i, (noise, mode)) in keys.iter().enumerate() {
        let rows: Vec<&FitRow> = fits
            .iter()
            .filter(|r| &r.noise == noise && &r.mode == mode)
            .collect();
        let eps_pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.t_d, r.f_eps)).collect();
        let delta_pts: Vec<(f64, f64)> = rows.iter().map(|r| (r.t_d, r.f_delta)).collect();
        fig.line(
            &eps_pts,
            Some(&format!("{noise} {mode} F_eps")),
            color(i),
            false,
        );
        fig.markers(&eps_pts, None, color(i));
        fig.line(
            &delta_pts,
            Some(&format!("{noise} {mode} F_delta")),
            color(i),
            true,
        );
    }
    fig
}

fn p_vs_p_figure(fits: &[FitRow]) -> Result<Figure, CliError> {
    // Pair coded and control rows of the same noise pass and storage time.
    let noises = group_labels(
        &fits
            .iter()
            .map(|r| (r.noise.clone(), String::new()))
            .collect::<Vec<_>>(),
    );
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for (noise, _) in &noises {
        let mut pts: Vec<(f64, f64)> = Vec::new();
        for control in fits.iter().filter(|r| &r.noise == noise && r.mode == "control") {
            if let Some(coded) = fits
                .iter()
                .find(|r| &r.noise == noise && r.mode == "coded" && r.t_d == control.t_d)
            {
                pts.push((control.p_eps, coded.p_eps));
            }
        }
        if !pts.is_empty() {
            series.push((noise.clone(), pts));
        }
    }
    if series.is_empty() {
        return Err(CliError::Config(
            "fits.csv lacks paired coded/control rows".into(),
        ));
    }
    let max = series
        .iter()
        .flat_map(|(_, pts)| pts.iter().flat_map(|&(x, y)| [x, y]))
        .fold(0.0f64, f64::max)
        .max(1e-3);
    let hi = 1.15 * max;
    let mut fig = Figure::new_equal_aspect(
        "Inferred error probability, coded vs control",
        "p (control)",
        "p (coded)",
        (0.0, hi),
        (0.0, hi),
    );
    fig.line(&[(0.0, 0.0), (hi, hi)], Some("45° reference"), "#555555", true);
    for (i, (noise, pts)) in series.iter().enumerate() {
        fig.markers(pts, Some(&format!("{noise}")), color(i));
        fig.line(pts, None, color(i), false);
    }
    Ok(fig)
}

/// Figures of merit for all tradeoff models against error probability.
///
/// Shared with `cmd_tradeoff`, which renders it right after tabulating.
pub fn flows_figure(rows: &[TradeoffRow], mark_p: Option<f64>) -> Figure {
    let mut models: Vec<String> = Vec::new();
    for r in rows {
        if !models.contains(&r.model) {
            models.push(r.model.clone());
        }
    }
    let x_range = series_range(rows.iter().map(|r| r.p));
    let y_range = series_range(
        rows.iter()
            .flat_map(|r| [r.detection_figure, r.correction_figure]),
    );
    let mut fig = Figure::new(
        "Detection vs correction figures of merit",
        "error probability p",
        "figure of merit",
        x_range,
        y_range,
    );
    for (i, model) in models.iter().enumerate() {
        let group: Vec<&TradeoffRow> = rows.iter().filter(|r| &r.model == model).collect();
        let det: Vec<(f64, f64)> = group.iter().map(|r| (r.p, r.detection_figure)).collect();
        let cor: Vec<(f64, f64)> = group.iter().map(|r| (r.p, r.correction_figure)).collect();
        fig.line(&det, Some(&format!("{model} detection")), color(i), false);
        fig.line(&cor, Some(&format!("{model} correction")), color(i), true);
        if let Some(first) = group.first() {
            let p_star = first.crossover_p;
            if p_star > x_range.0 && p_star < x_range.1 {
                fig.vline(p_star, color(i), true, Some(&format!("p* = {p_star:.4}")));
            }
        }
    }
    if let Some(mark) = mark_p {
        if mark > x_range.0 && mark < x_range.1 {
            fig.vline(mark, "#333333", false, Some(&format!("p ≤ {mark:.3}")));
        }
    }
    fig
}
