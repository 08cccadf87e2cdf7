//! The `run` subcommand: (θ, t_d, mode) sweep execution, ellipse fitting,
//! and deterministic result persistence.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use twospin::analysis::{
    ellipticity, fidelity_from_ellipticity, fit_ellipse, overlap_fidelity, EllipseFit,
};
use twospin::experiment::{acceptance_weight, averaged_trial, readout, Mode};

use crate::config;
use crate::error::CliError;

/// Arguments of `twospin run`.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// Config file path or bundled preset name.
    #[arg(long)]
    pub config: String,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
    /// RNG seed; consumed only by the optional bootstrap resampling.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads for the sweep; 0 means one per core.
    #[arg(long, default_value_t = 0)]
    pub parallelism: usize,
}

/// One decoded trial as persisted in `trials.csv`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRow {
    pub noise: String,
    pub mode: String,
    pub t_d: f64,
    pub theta: f64,
    pub z_accepted: f64,
    pub x_accepted: f64,
    pub z_rejected: f64,
    pub x_rejected: f64,
    pub acceptance_weight: f64,
}

/// One fitted ellipse as persisted in `fits.csv`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitRow {
    pub noise: String,
    pub mode: String,
    pub t_d: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub se_a: f64,
    pub se_b: f64,
    pub se_c: f64,
    pub se_d: f64,
    pub residual_rms: f64,
    pub eps: f64,
    pub f_eps: f64,
    pub f_delta: f64,
    pub p_eps: f64,
    pub normalization_amplitude: f64,
}

/// Fixed-width float serialization: 17 significant digits, enough to
/// round-trip any f64 bit pattern.
pub fn fmt_f64(v: f64) -> String {
    let v = if v == 0.0 { 0.0 } else { v }; // normalize -0.0
    format!("{v:.16e}")
}

const TRIALS_HEADER: [&str; 9] = [
    "noise",
    "mode",
    "t_d",
    "theta",
    "z_accepted",
    "x_accepted",
    "z_rejected",
    "x_rejected",
    "acceptance_weight",
];

const FITS_HEADER: [&str; 17] = [
    "noise",
    "mode",
    "t_d",
    "a",
    "b",
    "c",
    "d",
    "se_a",
    "se_b",
    "se_c",
    "se_d",
    "residual_rms",
    "eps",
    "f_eps",
    "f_delta",
    "p_eps",
    "normalization_amplitude",
];

/// Run manifest written alongside the CSV outputs.
#[derive(Debug, Serialize, Deserialize)]
pub struct RunManifest {
    /// Content hash of the resolved configuration document.
    pub config_digest: String,
    pub tool_version: String,
    /// Wall-clock time of the run (RFC 3339, UTC). The CSV outputs do not
    /// depend on it.
    pub timestamp: String,
    /// Files the run produced, relative to the output directory, sorted.
    pub output_paths: Vec<String>,
}

/// Execute the sweep described by a config and persist the outputs.
pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    if args.parallelism > 0 {
        // Only effective once per process; later calls keep the first pool.
        rayon::ThreadPoolBuilder::new()
            .num_threads(args.parallelism)
            .build_global()
            .ok();
    }
    let resolved = config::resolve(config::load(&args.config)?)?;
    let canonical = config::canonical_json(&resolved.doc);
    let digest = config::digest(&canonical);

    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::io(&args.out_dir, e))?;

    let variants = resolved.variants();
    let modes = [Mode::Coded, Mode::Control];
    let n_theta = resolved.ideal.theta_grid.len();
    let n_times = resolved.ideal.storage_times.len();

    // Deterministic job order: noise pass, then mode, then t_d, then θ.
    // The parallel map preserves this order on collect.
    let mut jobs: Vec<(usize, Mode, usize, usize)> = Vec::new();
    for vi in 0..variants.len() {
        for mode in modes {
            for ti in 0..n_times {
                for k in 0..n_theta {
                    jobs.push((vi, mode, ti, k));
                }
            }
        }
    }
    println!(
        "config {} ({digest})",
        args.config
    );
    println!(
        "sweep: {} noise pass(es) x {} modes x {} storage times x {} angles = {} trials",
        variants.len(),
        modes.len(),
        n_times,
        n_theta,
        jobs.len()
    );

    let trials: Vec<TrialRow> = jobs
        .par_iter()
        .map(|&(vi, mode, ti, k)| {
            let (variant, cfg) = variants[vi];
            let t_d = cfg.storage_times[ti];
            let theta = cfg.theta_grid[k];
            let coeffs = averaged_trial(cfg, theta, t_d, mode);
            let decoded = readout(&coeffs.reconstruct());
            TrialRow {
                noise: variant.label().into(),
                mode: mode.to_string(),
                t_d,
                theta,
                z_accepted: decoded.accepted.z,
                x_accepted: decoded.accepted.x,
                z_rejected: decoded.rejected.z,
                x_rejected: decoded.rejected.x,
                acceptance_weight: acceptance_weight(mode, &cfg.damping_for(t_d)),
            }
        })
        .collect();

    // Fit one ellipse per (noise pass, mode, t_d) group. Groups are the
    // consecutive θ-chunks of the trial list.
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut fits: Vec<FitRow> = Vec::new();
    for (gi, chunk) in trials.chunks(n_theta).enumerate() {
        let (vi, mode, ti, _) = jobs[gi * n_theta];
        let (variant, cfg) = variants[vi];
        let t_d = cfg.storage_times[ti];
        let trial_name = format!(
            "noise={} mode={} t_d={:.6}",
            variant.label(),
            mode,
            t_d
        );
        let points: Vec<(f64, f64, f64)> = chunk
            .iter()
            .map(|r| (r.theta, r.z_accepted, r.x_accepted))
            .collect();
        let fit = fit_ellipse(&points)
            .map_err(|e| CliError::Numeric(format!("ellipse fit failed for {trial_name}: {e}")))?;
        let eps = ellipticity(&fit)
            .map_err(|e| CliError::Numeric(format!("ellipticity failed for {trial_name}: {e}")))?;
        let f_eps = fidelity_from_ellipticity(eps);
        let normalization = points
            .iter()
            .find(|&&(t, _, _)| t.abs() < 1e-9)
            .map(|&(_, z, x)| z.hypot(x))
            .expect("theta grid starts at 0");
        let f_delta = overlap_fidelity(&points, normalization).map_err(|e| {
            CliError::Numeric(format!("overlap fidelity failed for {trial_name}: {e}"))
        })?;

        let (se_a, se_b, se_c, se_d) = if resolved.doc.analysis.bootstrap {
            bootstrap_errors(
                &points,
                &fit,
                resolved.doc.analysis.bootstrap_samples,
                &mut rng,
            )
            .map_err(|e| CliError::Numeric(format!("bootstrap failed for {trial_name}: {e}")))?
        } else {
            (fit.se_a, fit.se_b, fit.se_c, fit.se_d)
        };

        println!(
            "  {trial_name}  eps={eps:.6}  F_eps={f_eps:.6}  F_delta={f_delta:.6}"
        );
        fits.push(FitRow {
            noise: variant.label().into(),
            mode: mode.to_string(),
            t_d,
            a: fit.a,
            b: fit.b,
            c: fit.c,
            d: fit.d,
            se_a,
            se_b,
            se_c,
            se_d,
            residual_rms: fit.residual_rms,
            eps,
            f_eps,
            f_delta,
            p_eps: 1.0 - f_eps,
            normalization_amplitude: normalization,
        });
    }

    let trials_path = args.out_dir.join("trials.csv");
    let fits_path = args.out_dir.join("fits.csv");
    let config_path = args.out_dir.join("resolved_config.json");
    let manifest_path = args.out_dir.join("manifest.json");

    write_trials(&trials_path, &trials)?;
    write_fits(&fits_path, &fits)?;
    write_text(&config_path, &canonical)?;

    let manifest = RunManifest {
        config_digest: digest,
        tool_version: env!("CARGO_PKG_VERSION").into(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        output_paths: vec![
            "fits.csv".into(),
            "resolved_config.json".into(),
            "trials.csv".into(),
        ],
    };
    let mut manifest_text =
        serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    manifest_text.push('\n');
    write_text(&manifest_path, &manifest_text)?;

    println!(
        "wrote {}, {}, {}, {}",
        trials_path.display(),
        fits_path.display(),
        config_path.display(),
        manifest_path.display()
    );
    Ok(())
}

/// Residual-bootstrap standard errors for the four ellipse parameters.
///
/// Resamples intensity residuals with replacement, refits, and reports the
/// sample standard deviation of each parameter over the resamples.
fn bootstrap_errors(
    points: &[(f64, f64, f64)],
    fit: &EllipseFit,
    samples: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64, f64, f64), String> {
    let n = points.len();
    let residuals: Vec<f64> = points
        .iter()
        .map(|&(t, z, x)| z * z + x * x - fit.model(t))
        .collect();
    let mut params: Vec<[f64; 4]> = Vec::with_capacity(samples);
    for _ in 0..samples {
        let synthetic: Vec<(f64, f64, f64)> = points
            .iter()
            .map(|&(t, _, _)| {
                let intensity = fit.model(t) + residuals[rng.gen_range(0..n)];
                (t, intensity.max(0.0).sqrt(), 0.0)
            })
            .collect();
        match fit_ellipse(&synthetic) {
            Ok(f) => params.push([f.a, f.b, f.c, f.d]),
            Err(_) => continue, // skip degenerate resamples
        }
    }
    if params.len() < 2 {
        return Err(format!(
            "only {} of {samples} resamples produced a fit",
            params.len()
        ));
    }
    let m = params.len() as f64;
    let mut se = [0.0f64; 4];
    for i in 0..4 {
        let mean: f64 = params.iter().map(|p| p[i]).sum::<f64>() / m;
        let var: f64 = params.iter().map(|p| (p[i] - mean).powi(2)).sum::<f64>() / (m - 1.0);
        se[i] = var.sqrt();
    }
    Ok((se[0], se[1], se[2], se[3]))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let mut file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    file.write_all(text.as_bytes())
        .map_err(|e| CliError::io(path, e))
}

fn write_trials(path: &Path, rows: &[TrialRow]) -> Result<(), CliError> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    wtr.write_record(TRIALS_HEADER).map_err(|e| csv_err(path, e))?;
    for r in rows {
        wtr.write_record([
            r.noise.as_str(),
            r.mode.as_str(),
            &fmt_f64(r.t_d),
            &fmt_f64(r.theta),
            &fmt_f64(r.z_accepted),
            &fmt_f64(r.x_accepted),
            &fmt_f64(r.z_rejected),
            &fmt_f64(r.x_rejected),
            &fmt_f64(r.acceptance_weight),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    wtr.flush().map_err(|e| CliError::io(path, e))
}

fn write_fits(path: &Path, rows: &[FitRow]) -> Result<(), CliError> {
    let mut wtr = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    wtr.write_record(FITS_HEADER).map_err(|e| csv_err(path, e))?;
    for r in rows {
        wtr.write_record([
            r.noise.as_str(),
            r.mode.as_str(),
            &fmt_f64(r.t_d),
            &fmt_f64(r.a),
            &fmt_f64(r.b),
            &fmt_f64(r.c),
            &fmt_f64(r.d),
            &fmt_f64(r.se_a),
            &fmt_f64(r.se_b),
            &fmt_f64(r.se_c),
            &fmt_f64(r.se_d),
            &fmt_f64(r.residual_rms),
            &fmt_f64(r.eps),
            &fmt_f64(r.f_eps),
            &fmt_f64(r.f_delta),
            &fmt_f64(r.p_eps),
            &fmt_f64(r.normalization_amplitude),
        ])
        .map_err(|e| csv_err(path, e))?;
    }
    wtr.flush().map_err(|e| CliError::io(path, e))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::Config(format!("{}: {e}", path.display()))
}

/// Read a `trials.csv` produced by `cmd_run`.
pub fn read_trials(path: &Path) -> Result<Vec<TrialRow>, CliError> {
    read_rows(path)
}

/// Read a `fits.csv` produced by `cmd_run`.
pub fn read_fits(path: &Path) -> Result<Vec<FitRow>, CliError> {
    read_rows(path)
}

fn read_rows<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, CliError> {
    if !path.is_file() {
        return Err(CliError::Config(format!(
            "no results at {}; run `twospin run` first",
            path.display()
        )));
    }
    let mut rdr = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let rows: Result<Vec<T>, csv::Error> = rdr.deserialize().collect();
    let rows = rows.map_err(|e| csv_err(path, e))?;
    if rows.is_empty() {
        return Err(CliError::Config(format!(
            "{} holds no data rows",
            path.display()
        )));
    }
    Ok(rows)
}
