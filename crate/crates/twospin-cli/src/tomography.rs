//! The `tomography` subcommand: simulate a pipeline stage and reconstruct
//! its deviation density matrix from the nine readout experiments.

use std::path::{Path, PathBuf};

use clap::Args;
use twospin::experiment::{run_to_stage, tomography, Mode, Stage};
use twospin::gates::Scales;
use twospin::qcore::{pauli_decompose_unchecked, PauliCoeffs};

use crate::args::{ModeArg, StageArg};
use crate::config;
use crate::error::CliError;
use crate::run::fmt_f64;

/// Arguments of `twospin tomography`.
#[derive(Debug, Args)]
pub struct TomographyArgs {
    /// Pipeline stage to reconstruct.
    #[arg(value_enum)]
    pub stage: StageArg,
    /// Config file path or bundled preset name.
    #[arg(long, default_value = "formate_ideal")]
    pub config: String,
    /// Preparation angle θ in radians.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
    pub theta: f64,
    /// Storage duration in seconds (default: 12 coupling cycles).
    #[arg(long = "t-d")]
    pub t_d: Option<f64>,
    /// Trial mode.
    #[arg(long, value_enum, default_value_t = ModeArg::Coded)]
    pub mode: ModeArg,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    pub out_dir: PathBuf,
}

/// Simulate the requested stage with ideal pulses, reconstruct it, and
/// persist coefficient and amplitude/phase tables.
pub fn cmd_tomography(args: &TomographyArgs) -> Result<(), CliError> {
    let resolved = config::resolve(config::load(&args.config)?)?;
    let cfg = &resolved.ideal;
    if !args.theta.is_finite() {
        return Err(CliError::Config(format!(
            "--theta must be finite, got {}",
            args.theta
        )));
    }
    let t_d = args.t_d.unwrap_or(12.0 / cfg.j_hz);
    if !(t_d.is_finite() && t_d >= 0.0) {
        return Err(CliError::Config(format!(
            "--t-d must be a non-negative finite duration, got {t_d}"
        )));
    }
    std::fs::create_dir_all(&args.out_dir).map_err(|e| CliError::io(&args.out_dir, e))?;

    let stage = Stage::from(args.stage);
    let mode = Mode::from(args.mode);
    let rho = run_to_stage(cfg, args.theta, t_d, mode, Scales::IDEAL, stage);
    let reconstructed = tomography(&rho).map_err(|e| {
        CliError::Numeric(format!(
            "tomography failed for stage {stage} (mode={mode}, theta={:.6}, t_d={t_d:.6}): {e}",
            args.theta
        ))
    })?;
    let direct = pauli_decompose_unchecked(&rho);

    let coeff_path = args.out_dir.join(format!("tomography_{stage}.csv"));
    write_coefficients(&coeff_path, &reconstructed, &direct)?;

    let matrix = reconstructed.reconstruct();
    let amp_path = args.out_dir.join(format!("tomography_{stage}_amplitude.csv"));
    let phase_path = args.out_dir.join(format!("tomography_{stage}_phase.csv"));
    write_matrix(&amp_path, |k, l| matrix[(k, l)].norm())?;
    write_matrix(&phase_path, |k, l| {
        let entry = matrix[(k, l)];
        if entry.norm() < 1e-12 {
            0.0
        } else {
            entry.arg()
        }
    })?;

    let mut max_err = 0.0f64;
    for i in 0..4 {
        for j in 0..4 {
            if i == 0 && j == 0 {
                continue; // identity component is not observable
            }
            max_err = max_err.max((reconstructed.get(i, j) - direct.get(i, j)).abs());
        }
    }
    println!(
        "stage {stage} (mode={mode}, theta={:.6}, t_d={t_d:.6}): \
         max reconstruction error {max_err:.3e}",
        args.theta
    );
    let mut ranked: Vec<(usize, usize, f64)> = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .filter(|&(i, j)| !(i == 0 && j == 0))
        .map(|(i, j)| (i, j, reconstructed.get(i, j)))
        .filter(|&(_, _, v)| v.abs() > 1e-9)
        .collect();
    ranked.sort_by(|a, b| b.2.abs().partial_cmp(&a.2.abs()).expect("finite"));
    for &(i, j, v) in ranked.iter().take(6) {
        println!("  c_{i}{j} = {v:+.6}");
    }
    println!(
        "wrote {}, {}, {}",
        coeff_path.display(),
        amp_path.display(),
        phase_path.display()
    );
    Ok(())
}

fn write_coefficients(
    path: &Path,
    reconstructed: &PauliCoeffs,
    direct: &PauliCoeffs,
) -> Result<(), CliError> {
    let mut wtr = csv::Writer::from_path(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    wtr.write_record(["i", "j", "reconstructed", "direct", "abs_error"])
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    for i in 0..4 {
        for j in 0..4 {
            let r = reconstructed.get(i, j);
            let d = direct.get(i, j);
            wtr.write_record([
                &i.to_string(),
                &j.to_string(),
                &fmt_f64(r),
                &fmt_f64(d),
                &fmt_f64((r - d).abs()),
            ])
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        }
    }
    wtr.flush().map_err(|e| CliError::io(path, e))
}

/// Write a 4×4 real table derived from the reconstructed matrix, rows and
/// columns labeled by computational-basis kets.
fn write_matrix(path: &Path, entry: impl Fn(usize, usize) -> f64) -> Result<(), CliError> {
    const KETS: [&str; 4] = ["00", "01", "10", "11"];
    let mut wtr = csv::Writer::from_path(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    wtr.write_record(["ket", KETS[0], KETS[1], KETS[2], KETS[3]])
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    for k in 0..4 {
        let mut record = vec![KETS[k].to_string()];
        for l in 0..4 {
            record.push(fmt_f64(entry(k, l)));
        }
        wtr.write_record(&record)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    }
    wtr.flush().map_err(|e| CliError::io(path, e))
}
