//! Run configuration: JSON schema, validation, bundled presets, and
//! resolution into simulator settings.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use twospin::channels::{calibrate_gamma, AmplitudeRelax, RfInhomogeneity};
use twospin::experiment::{ExperimentConfig, NoiseSettings};

use crate::error::CliError;

/// Bundled presets selectable by name instead of a file path.
pub const BUNDLED: [(&str, &str); 3] = [
    ("chloroform", include_str!("../configs/chloroform.json")),
    ("formate_ideal", include_str!("../configs/formate_ideal.json")),
    ("formate_rf", include_str!("../configs/formate_rf.json")),
];

/// Top-level run configuration as read from a JSON document.
///
/// Every field has a default (the ideal formate experiment), so `{}` is a
/// complete document.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSection,
    pub relaxation: RelaxationSection,
    pub sweep: SweepSection,
    pub noise: NoiseSection,
    pub analysis: AnalysisSection,
}

/// Molecule-level constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemSection {
    /// Scalar coupling in Hz.
    pub j_hz: f64,
    /// Relative thermal polarization weight of the data spin.
    pub omega_a: f64,
    /// Relative thermal polarization weight of the ancilla spin.
    pub omega_b: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        SystemSection {
            j_hz: 195.0,
            omega_a: 4.0,
            omega_b: 1.0,
        }
    }
}

/// Per-spin relaxation and pulse-quality parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RelaxationSection {
    /// Effective dephasing time of the data spin, seconds.
    pub t2_star_a: f64,
    /// Effective dephasing time of the ancilla spin, seconds.
    pub t2_star_b: f64,
    /// Longitudinal relaxation time of the data spin, seconds.
    pub t1_a: f64,
    /// Longitudinal relaxation time of the ancilla spin, seconds.
    pub t1_b: f64,
    /// Measured ensemble attenuation of a nominal π/2 pulse on the data
    /// spin (1 = perfectly homogeneous field).
    pub attenuation_a: f64,
    /// Same for the ancilla spin.
    pub attenuation_b: f64,
    /// Marks the dephasing times as upper-bound estimates rather than
    /// measured values (informational; does not affect the simulation).
    pub approximate_t2_star: bool,
}

impl Default for RelaxationSection {
    fn default() -> Self {
        RelaxationSection {
            t2_star_a: 0.35,
            t2_star_b: 0.50,
            t1_a: 9.0,
            t1_b: 13.5,
            attenuation_a: 0.96,
            attenuation_b: 0.92,
            approximate_t2_star: false,
        }
    }
}

/// Preparation-angle and storage-time grids.
///
/// Storage durations come from `storage_cycles` (integer multiples of the
/// coupling period 1/J) or explicitly from `storage_times` (seconds); a
/// document may set at most one of the two. When neither is given the
/// default is cycles 0, 12, …, 60.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Number of evenly spaced preparation angles spanning [0, π].
    pub theta_points: usize,
    pub storage_cycles: Option<Vec<u32>>,
    pub storage_times: Option<Vec<f64>>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            theta_points: 11,
            storage_cycles: None,
            storage_times: None,
        }
    }
}

/// Default storage grid in coupling cycles when the sweep section names
/// neither cycles nor times.
pub const DEFAULT_STORAGE_CYCLES: [u32; 6] = [0, 12, 24, 36, 48, 60];

/// Imperfection-model switches.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    /// Average pulses over a calibrated RF-field inhomogeneity ensemble.
    pub rf_inhomogeneity: bool,
    /// Apply longitudinal relaxation during storage.
    pub amplitude_relax: bool,
    /// Ensemble support half-width in units of the Lorentzian width γ.
    pub truncation: f64,
    /// Quadrature nodes per spin for the ensemble average.
    pub nodes: usize,
}

impl Default for NoiseSection {
    fn default() -> Self {
        NoiseSection {
            rf_inhomogeneity: false,
            amplitude_relax: false,
            truncation: twospin::channels::DEFAULT_TRUNCATION,
            nodes: twospin::channels::DEFAULT_NODES,
        }
    }
}

/// Fit options.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    /// Replace the analytic fit standard errors with residual-bootstrap
    /// estimates (seeded by `--seed`).
    pub bootstrap: bool,
    /// Number of bootstrap resamples.
    pub bootstrap_samples: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            bootstrap: false,
            bootstrap_samples: 200,
        }
    }
}

/// Which imperfection models a sweep pass applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseVariant {
    /// Ideal pulses, pure dephasing only.
    Ideal,
    /// The configured imperfection models.
    Modeled,
}

impl NoiseVariant {
    pub fn label(self) -> &'static str {
        match self {
            NoiseVariant::Ideal => "ideal",
            NoiseVariant::Modeled => "modeled",
        }
    }
}

/// A validated configuration resolved into simulator settings.
#[derive(Debug, Clone)]
pub struct ResolvedRun {
    /// Normalized configuration document (defaults filled, storage grid
    /// expressed in seconds); this is what gets digested and persisted.
    pub doc: RunConfig,
    /// Simulator settings for the ideal pass.
    pub ideal: ExperimentConfig,
    /// Simulator settings for the imperfection pass, when any noise model
    /// is enabled.
    pub modeled: Option<ExperimentConfig>,
}

impl ResolvedRun {
    /// The sweep passes to run, in output order.
    pub fn variants(&self) -> Vec<(NoiseVariant, &ExperimentConfig)> {
        let mut v = vec![(NoiseVariant::Ideal, &self.ideal)];
        if let Some(m) = &self.modeled {
            v.push((NoiseVariant::Modeled, m));
        }
        v
    }
}

/// Load a configuration from a file path or a bundled preset name.
pub fn load(path_or_name: &str) -> Result<RunConfig, CliError> {
    let text = if Path::new(path_or_name).is_file() {
        std::fs::read_to_string(path_or_name)
            .map_err(|e| CliError::io(path_or_name, e))?
    } else if let Some((_, text)) = BUNDLED.iter().find(|(n, _)| *n == path_or_name) {
        (*text).to_string()
    } else {
        let names: Vec<&str> = BUNDLED.iter().map(|(n, _)| *n).collect();
        return Err(CliError::Config(format!(
            "'{path_or_name}' is neither a readable file nor a bundled preset \
             (available presets: {})",
            names.join(", ")
        )));
    };
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{path_or_name}: {e}")))
}

fn require(ok: bool, msg: impl Into<String>) -> Result<(), CliError> {
    if ok {
        Ok(())
    } else {
        Err(CliError::Config(msg.into()))
    }
}

fn positive_finite(value: f64, field: &str) -> Result<(), CliError> {
    require(
        value.is_finite() && value > 0.0,
        format!("{field} must be a positive finite number, got {value}"),
    )
}

/// Validate a configuration and resolve it into simulator settings.
pub fn resolve(mut config: RunConfig) -> Result<ResolvedRun, CliError> {
    let sys = &config.system;
    positive_finite(sys.j_hz, "system.j_hz")?;
    positive_finite(sys.omega_a, "system.omega_a")?;
    require(
        sys.omega_b.is_finite() && sys.omega_b >= 0.0,
        format!(
            "system.omega_b must be a non-negative finite number, got {}",
            sys.omega_b
        ),
    )?;

    let rel = &config.relaxation;
    positive_finite(rel.t2_star_a, "relaxation.t2_star_a")?;
    positive_finite(rel.t2_star_b, "relaxation.t2_star_b")?;
    positive_finite(rel.t1_a, "relaxation.t1_a")?;
    positive_finite(rel.t1_b, "relaxation.t1_b")?;
    for (att, field) in [
        (rel.attenuation_a, "relaxation.attenuation_a"),
        (rel.attenuation_b, "relaxation.attenuation_b"),
    ] {
        require(
            att.is_finite() && att > 0.0 && att <= 1.0,
            format!("{field} must lie in (0, 1], got {att}"),
        )?;
    }

    let sweep = &config.sweep;
    require(
        (5..=10001).contains(&sweep.theta_points),
        format!(
            "sweep.theta_points must lie in 5…10001 (the ellipse fit needs \
             at least 5 angles), got {}",
            sweep.theta_points
        ),
    )?;
    let mut storage_times: Vec<f64> = match (&sweep.storage_cycles, &sweep.storage_times) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "sweep.storage_cycles and sweep.storage_times are mutually \
                 exclusive; set at most one"
                    .into(),
            ));
        }
        (Some(cycles), None) => {
            require(!cycles.is_empty(), "sweep.storage_cycles must be non-empty")?;
            cycles.iter().map(|&n| f64::from(n) / sys.j_hz).collect()
        }
        (None, Some(times)) => {
            require(!times.is_empty(), "sweep.storage_times must be non-empty")?;
            for &t in times {
                require(
                    t.is_finite() && t >= 0.0,
                    format!("sweep.storage_times entries must be ≥ 0, got {t}"),
                )?;
            }
            times.clone()
        }
        (None, None) => DEFAULT_STORAGE_CYCLES
            .iter()
            .map(|&n| f64::from(n) / sys.j_hz)
            .collect(),
    };
    storage_times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    storage_times.dedup();

    let noise = &config.noise;
    require(
        noise.truncation.is_finite() && noise.truncation > 0.0 && noise.truncation <= 100.0,
        format!(
            "noise.truncation must lie in (0, 100], got {}",
            noise.truncation
        ),
    )?;
    require(
        (2..=2048).contains(&noise.nodes),
        format!("noise.nodes must lie in 2…2048, got {}", noise.nodes),
    )?;

    let analysis = &config.analysis;
    if analysis.bootstrap {
        require(
            (2..=100_000).contains(&analysis.bootstrap_samples),
            format!(
                "analysis.bootstrap_samples must lie in 2…100000, got {}",
                analysis.bootstrap_samples
            ),
        )?;
    }

    let n = sweep.theta_points;
    let theta_grid: Vec<f64> = (0..n).map(|k| k as f64 * PI / (n - 1) as f64).collect();

    let base = ExperimentConfig {
        j_hz: sys.j_hz,
        theta_grid,
        storage_times: storage_times.clone(),
        omega_a: sys.omega_a,
        omega_b: sys.omega_b,
        t2s_a: rel.t2_star_a,
        t2s_b: rel.t2_star_b,
        noise: NoiseSettings::default(),
    };

    let modeled = if noise.rf_inhomogeneity || noise.amplitude_relax {
        let rf = if noise.rf_inhomogeneity {
            let gamma_for = |target: f64, field: &str| -> Result<f64, CliError> {
                if target == 1.0 {
                    return Ok(0.0);
                }
                calibrate_gamma(target, noise.truncation, noise.nodes).map_err(|e| {
                    CliError::Config(format!(
                        "{field}: target {target} is not achievable with the \
                         configured ensemble ({e})"
                    ))
                })
            };
            Some(RfInhomogeneity {
                gamma_a: gamma_for(rel.attenuation_a, "relaxation.attenuation_a")?,
                gamma_b: gamma_for(rel.attenuation_b, "relaxation.attenuation_b")?,
                target_attenuation_a: rel.attenuation_a,
                target_attenuation_b: rel.attenuation_b,
                truncation: noise.truncation,
                nodes: noise.nodes,
            })
        } else {
            None
        };
        let amplitude = if noise.amplitude_relax {
            Some(AmplitudeRelax {
                t1_a: rel.t1_a,
                t1_b: rel.t1_b,
                z_inf: 1.0,
            })
        } else {
            None
        };
        Some(ExperimentConfig {
            noise: NoiseSettings { rf, amplitude },
            ..base.clone()
        })
    } else {
        None
    };

    // Normalize the persisted document: the storage grid is always recorded
    // in seconds so re-running the resolved document reproduces it bit for
    // bit regardless of how the original expressed the grid.
    config.sweep.storage_cycles = None;
    config.sweep.storage_times = Some(storage_times);

    Ok(ResolvedRun {
        doc: config,
        ideal: base,
        modeled,
    })
}

/// Pretty-printed canonical form of a resolved document.
pub fn canonical_json(doc: &RunConfig) -> String {
    let mut text = serde_json::to_string_pretty(doc).expect("config serializes");
    text.push('\n');
    text
}

/// Content digest of a canonical document.
pub fn digest(canonical: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    format!("sha256:{:x}", hasher.finalize())
}
