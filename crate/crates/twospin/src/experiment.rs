//! End-to-end experiment pipeline: thermal state, temporal labeling, input
//! preparation, coded/control storage with refocusing, readout, peak
//! integrals, spectrum synthesis, and state tomography.
//!
//! States are deviation density matrices (traceless Hermitian 4×4), not
//! unit-trace density operators. The pipeline for one trial is
//!
//! ```text
//! labeled initial state ρ0
//!   → Y_a(θ) preparation            (ρ1)
//!   → encoder (coded mode only)     (ρ3)
//!   → storage with refocusing       (ρ4)
//!   → decoder (coded mode only)     (ρ5)
//!   → readout pulse + peak integrals
//! ```
//!
//! The accepted output of the data spin is read from the low-frequency
//! line of its doublet (ancilla in |0⟩) and the rejected output from the
//! high-frequency line (ancilla in |1⟩).

use crate::channels::{
    ensemble_average, phase_damp_2q, AmplitudeRelax, DampingParams, RfInhomogeneity,
};
use crate::gates::{
    compile, gate_library, j_coupling_unitary, rotation_unitary, Axis, Gate, PulseSequence,
    Scales, Spin,
};
use crate::qcore::{
    id2, pauli2, pauli_decompose_unchecked, sigma_z, tensor, BlochVector, Matrix4c, PauliCoeffs,
    C64,
};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Errors raised by the experiment pipeline.
#[derive(Debug, Error)]
pub enum ExperimentError {
    /// The spectrum grid does not cover the doublet lines with enough
    /// margin or resolution for 1%-accurate line areas.
    #[error("spectrum grid insufficient: {reason}")]
    InsufficientGrid { reason: String },
    /// The tomography design matrix lost rank (cannot happen for the
    /// built-in pulse set).
    #[error("tomography inversion is singular")]
    SingularTomography,
}

/// Whether a trial protects the input with the detection code or stores it
/// bare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Encode before storage, decode after.
    Coded,
    /// Storage only; encoder and decoder omitted.
    Control,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Coded => "coded",
            Mode::Control => "control",
        })
    }
}

/// Named intermediate states of the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    /// Labeled initial state.
    Rho0,
    /// After the θ preparation pulse.
    Rho1,
    /// After encoding (equals `Rho1` in control mode).
    Rho3,
    /// After the storage interval.
    Rho4,
    /// After decoding (equals `Rho4` in control mode).
    Rho5,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Stage::Rho0 => "rho0",
            Stage::Rho1 => "rho1",
            Stage::Rho3 => "rho3",
            Stage::Rho4 => "rho4",
            Stage::Rho5 => "rho5",
        })
    }
}

/// Optional imperfection models applied during a trial.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSettings {
    /// RF-field inhomogeneity ensemble; `None` means ideal pulse angles.
    pub rf: Option<RfInhomogeneity>,
    /// Longitudinal relaxation during storage; `None` disables it.
    pub amplitude: Option<AmplitudeRelax>,
}

/// Parameters of one simulated experiment family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Scalar coupling in Hz.
    pub j_hz: f64,
    /// Preparation angles θ (radians), conventionally spanning [0, π].
    pub theta_grid: Vec<f64>,
    /// Storage durations in seconds (each ≥ 0).
    pub storage_times: Vec<f64>,
    /// Relative signal weight of the data spin's polarization.
    pub omega_a: f64,
    /// Relative signal weight of the ancilla spin's polarization.
    pub omega_b: f64,
    /// Effective dephasing time of the data spin, seconds.
    pub t2s_a: f64,
    /// Effective dephasing time of the ancilla spin, seconds.
    pub t2s_b: f64,
    /// Optional imperfection models.
    pub noise: NoiseSettings,
}

/// Evenly spaced preparation angles `kπ/10` for `k = 0…10`.
pub fn default_theta_grid() -> Vec<f64> {
    (0..=10).map(|k| k as f64 * PI / 10.0).collect()
}

/// Storage durations `n·12/J` for `n = 0…5` (≈ 0…308 ms at J = 195 Hz),
/// integer multiples of the coupling period so the bare J-evolution over a
/// full interval is trivial even without refocusing.
pub fn default_storage_times(j_hz: f64) -> Vec<f64> {
    (0..=5).map(|n| n as f64 * 12.0 / j_hz).collect()
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let j_hz = 195.0;
        ExperimentConfig {
            j_hz,
            theta_grid: default_theta_grid(),
            storage_times: default_storage_times(j_hz),
            omega_a: 4.0,
            omega_b: 1.0,
            t2s_a: 0.35,
            t2s_b: 0.50,
            noise: NoiseSettings::default(),
        }
    }
}

impl ExperimentConfig {
    /// A configuration in normalized signal units: the data spin carries
    /// unit polarization and the ancilla's thermal term is dropped, so the
    /// ideal trial outputs land directly on the unit circle.
    pub fn unit_signal() -> Self {
        ExperimentConfig {
            omega_a: 1.0,
            omega_b: 0.0,
            ..ExperimentConfig::default()
        }
    }

    /// Phase-damping strength accumulated over a storage interval.
    pub fn damping_for(&self, t_d: f64) -> DampingParams {
        DampingParams::from_times(t_d, self.t2s_a, self.t2s_b)
    }
}

/// High-temperature thermal deviation state
/// `(ω_a/2)σ_z⊗I + (ω_b/2)I⊗σ_z` (scalar-coupling term neglected).
pub fn thermal_state(omega_a: f64, omega_b: f64) -> Matrix4c {
    tensor(&sigma_z(), &id2()).scale(omega_a / 2.0)
        + tensor(&id2(), &sigma_z()).scale(omega_b / 2.0)
}

/// Temporal labeling: sum the thermal state conjugated by each preparation
/// unitary, `Σ_k P_k ρ_th P_k†`.
///
/// Adding the bare experiment to one prepended with the coupling-phase
/// controlled-NOT turns the thermal state into
/// `ω_a σ_z⊗|0⟩⟨0| + ω_b I⊗σ_z`: an effective pure-state term on the
/// spin pair plus an ancilla term that never reaches the data spin's
/// spectrum.
pub fn temporal_label(rho_th: &Matrix4c, preps: &[PulseSequence], j_hz: f64) -> Matrix4c {
    let mut sum = Matrix4c::zeros();
    for prep in preps {
        let p = compile(prep, j_hz, Scales::IDEAL);
        sum += p * rho_th * p.adjoint();
    }
    sum
}

/// The labeled initial state `ω_a σ_z⊗|0⟩⟨0| + ω_b I⊗σ_z` produced by the
/// two-experiment labeling scheme (labeling pulses are treated as ideal).
pub fn labeled_initial_state(omega_a: f64, omega_b: f64) -> Matrix4c {
    let ket0 = (id2() + sigma_z()).scale(0.5);
    tensor(&sigma_z(), &ket0).scale(omega_a) + tensor(&id2(), &sigma_z()).scale(omega_b)
}

fn relax_longitudinal(rho: &Matrix4c, relax: &AmplitudeRelax, t: f64, cfg: &ExperimentConfig) -> Matrix4c {
    let mut coeffs = pauli_decompose_unchecked(rho);
    let eq_a = relax.z_inf * cfg.omega_a / 2.0;
    let eq_b = relax.z_inf * cfg.omega_b / 2.0;
    // Pull each spin's longitudinal coefficient toward its thermal value.
    coeffs.c[3][0] = eq_a + (coeffs.c[3][0] - eq_a) * (-t / relax.t1_a).exp();
    coeffs.c[0][3] = eq_b + (coeffs.c[0][3] - eq_b) * (-t / relax.t1_b).exp();
    coeffs.reconstruct()
}

/// One storage half: scalar-coupling evolution and phase damping over
/// `t_half` (they commute exactly), then optional longitudinal relaxation.
fn storage_half(rho: &Matrix4c, t_half: f64, cfg: &ExperimentConfig) -> Matrix4c {
    let u = j_coupling_unitary(t_half, cfg.j_hz);
    let damping = cfg.damping_for(t_half);
    let evolved = u * rho * u.adjoint();
    let damped = phase_damp_2q(&evolved, damping.p_a, damping.p_b)
        .expect("half-interval probabilities are within [0, 1/2) by construction");
    match &cfg.noise.amplitude {
        Some(relax) => relax_longitudinal(&damped, relax, t_half, cfg),
        None => damped,
    }
}

/// Storage of duration `t_d` with ancilla refocusing: half the interval,
/// a π pulse on the ancilla, the second half, and a closing π pulse.
///
/// Dephasing strength is computed per half-interval; the two halves
/// compose to exactly the full-interval damping. With ideal pulses the two
/// refocusing pulses cancel the scalar-coupling evolution exactly (the net
/// unitary is −1), for any `t_d` and `J`. A zero-duration storage applies
/// no pulses at all. Refocusing pulses are RF-scaled via `scales`.
pub fn run_storage(rho: &Matrix4c, t_d: f64, cfg: &ExperimentConfig, scales: Scales) -> Matrix4c {
    debug_assert!(t_d >= 0.0, "storage duration must be nonnegative");
    if t_d == 0.0 {
        return *rho;
    }
    let refocus = compile(&gate_library(Gate::RefocusB, cfg.j_hz), cfg.j_hz, scales);
    let mut state = storage_half(rho, t_d / 2.0, cfg);
    state = refocus * state * refocus.adjoint();
    state = storage_half(&state, t_d / 2.0, cfg);
    refocus * state * refocus.adjoint()
}

/// Simulate one trial up to a named pipeline stage with fixed per-spin RF
/// scale factors.
pub fn run_to_stage(
    cfg: &ExperimentConfig,
    theta: f64,
    t_d: f64,
    mode: Mode,
    scales: Scales,
    stage: Stage,
) -> Matrix4c {
    let rho0 = labeled_initial_state(cfg.omega_a, cfg.omega_b);
    if stage == Stage::Rho0 {
        return rho0;
    }
    let prep = rotation_unitary(Spin::A, Axis::Y, theta, scales.a);
    let rho1 = prep * rho0 * prep.adjoint();
    if stage == Stage::Rho1 {
        return rho1;
    }
    let rho3 = match mode {
        Mode::Coded => {
            let enc = compile(&gate_library(Gate::UEnc, cfg.j_hz), cfg.j_hz, scales);
            enc * rho1 * enc.adjoint()
        }
        Mode::Control => rho1,
    };
    if stage == Stage::Rho3 {
        return rho3;
    }
    let rho4 = run_storage(&rho3, t_d, cfg, scales);
    if stage == Stage::Rho4 {
        return rho4;
    }
    match mode {
        Mode::Coded => {
            let dec = compile(&gate_library(Gate::UDec, cfg.j_hz), cfg.j_hz, scales);
            dec * rho4 * dec.adjoint()
        }
        Mode::Control => rho4,
    }
}

/// Simulate one full trial: preparation at angle `theta`, optional
/// encoding, storage of duration `t_d`, optional decoding.
pub fn run_trial(
    cfg: &ExperimentConfig,
    theta: f64,
    t_d: f64,
    mode: Mode,
    scales: Scales,
) -> Matrix4c {
    run_to_stage(cfg, theta, t_d, mode, scales, Stage::Rho5)
}

/// One trial averaged over the configured RF-inhomogeneity ensemble
/// (or evaluated once at ideal scales when inhomogeneity is disabled).
pub fn averaged_trial(cfg: &ExperimentConfig, theta: f64, t_d: f64, mode: Mode) -> PauliCoeffs {
    match &cfg.noise.rf {
        None => pauli_decompose_unchecked(&run_trial(cfg, theta, t_d, mode, Scales::IDEAL)),
        Some(rf) => ensemble_average(
            |sa, sb| {
                pauli_decompose_unchecked(&run_trial(
                    cfg,
                    theta,
                    t_d,
                    mode,
                    Scales { a: sa, b: sb },
                ))
            },
            rf,
        ),
    }
}

/// Integrated areas of the four doublet lines.
///
/// Each spin's spectrum is a doublet split by J; the low-frequency line of
/// a spin is the transition with its partner in |0⟩ and the high-frequency
/// line with the partner in |1⟩. In terms of the state's Pauli
/// coefficients `c_ij` (data spin first):
///
/// ```text
/// I_a_low  = −[i(c_10 + c_13) + (c_20 + c_23)]
/// I_a_high = −[i(c_10 − c_13) + (c_20 − c_23)]
/// I_b_low  = −[i(c_01 + c_31) + (c_02 + c_32)]
/// I_b_high = −[i(c_01 − c_31) + (c_02 − c_32)]
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakIntegrals {
    pub a_high: C64,
    pub a_low: C64,
    pub b_high: C64,
    pub b_low: C64,
}

/// Peak integrals of the state as given (no readout pulse applied).
pub fn peak_integrals(rho: &Matrix4c) -> PeakIntegrals {
    let c = pauli_decompose_unchecked(rho).c;
    let line = |x_part: f64, y_part: f64| -C64::new(y_part, x_part);
    PeakIntegrals {
        a_low: line(c[1][0] + c[1][3], c[2][0] + c[2][3]),
        a_high: line(c[1][0] - c[1][3], c[2][0] - c[2][3]),
        b_low: line(c[0][1] + c[3][1], c[0][2] + c[3][2]),
        b_high: line(c[0][1] - c[3][1], c[0][2] - c[3][2]),
    }
}

/// Decoded single-trial outputs in peak-integral signal units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodedOutput {
    /// Data-spin Bloch components conditioned on the ancilla in |0⟩
    /// (low-frequency line). `y` is unobservable and reported as 0.
    pub accepted: BlochVector,
    /// Data-spin Bloch components conditioned on the ancilla in |1⟩
    /// (high-frequency line).
    pub rejected: BlochVector,
    /// Full Pauli decomposition of the pre-readout state.
    pub raw: PauliCoeffs,
}

/// Read out a final state: apply the π/2 data-spin readout pulse (which
/// moves the longitudinal coefficients into observable transverse ones),
/// then split the data-spin doublet into accepted and rejected components.
///
/// In the returned vectors, `z` is the real part of the line integral and
/// `x` the negated imaginary part, so an input prepared at angle θ with
/// unit amplitude reads back as `(z, x) = (cosθ, sinθ)` after an ideal,
/// lossless trial. The sum of accepted and rejected components equals the
/// (z, x) content of the unconditioned reduced state of the data spin.
pub fn readout(rho5: &Matrix4c) -> DecodedOutput {
    let raw = pauli_decompose_unchecked(rho5);
    let pulse = rotation_unitary(Spin::A, Axis::X, PI / 2.0, 1.0);
    let observed = peak_integrals(&(pulse * rho5 * pulse.adjoint()));
    let vector = |line: C64| BlochVector {
        x: -line.im,
        y: 0.0,
        z: line.re,
    };
    DecodedOutput {
        accepted: vector(observed.a_low),
        rejected: vector(observed.a_high),
        raw,
    }
}

/// Probability that a trial's output falls in the accepted (ancilla |0⟩)
/// line, for a unit-trace input.
///
/// In coded mode both the no-error and both-spins-error branches decode to
/// the accepted line: `(1−p_a)(1−p_b) + p_a p_b`. A control trial has no
/// ancilla processing, so every outcome is accepted.
pub fn acceptance_weight(mode: Mode, damping: &DampingParams) -> f64 {
    match mode {
        Mode::Coded => {
            (1.0 - damping.p_a) * (1.0 - damping.p_b) + damping.p_a * damping.p_b
        }
        Mode::Control => 1.0,
    }
}

/// Frequency grid for spectrum synthesis, in Hz relative to each spin's
/// carrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumGrid {
    pub f_min: f64,
    pub f_max: f64,
    pub points: usize,
}

impl SpectrumGrid {
    /// A grid wide and fine enough for 1%-accurate line areas at the given
    /// coupling and dephasing times.
    pub fn default_for(j_hz: f64, t2s_a: f64, t2s_b: f64) -> Self {
        let span = j_hz;
        let hwhm_min = 1.0 / (2.0 * PI * t2s_a.max(t2s_b));
        let points = (2.0 * span / (hwhm_min / 4.0)).ceil() as usize + 1;
        SpectrumGrid {
            f_min: -span,
            f_max: span,
            points,
        }
    }
}

/// Sampled absorption-mode spectra of the two spins.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Sample frequencies in Hz, relative to each spin's carrier.
    pub freqs_hz: Vec<f64>,
    /// Data-spin trace (doublet at ∓J/2).
    pub spin_a: Vec<C64>,
    /// Ancilla-spin trace (doublet at ∓J/2).
    pub spin_b: Vec<C64>,
}

impl Spectrum {
    /// Trapezoid-integrate one trace over `[lo, hi]`.
    fn integrate(freqs: &[f64], trace: &[C64], lo: f64, hi: f64) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for k in 1..freqs.len() {
            let (f0, f1) = (freqs[k - 1], freqs[k]);
            if f1 <= lo || f0 >= hi {
                continue;
            }
            acc += (trace[k - 1] + trace[k]) * C64::new(0.5 * (f1 - f0), 0.0);
        }
        acc
    }

    /// Numerically integrated (low, high) line areas for each spin, using
    /// windows `[−J, 0]` and `[0, J]` centred on the two lines.
    pub fn line_areas(&self, j_hz: f64) -> [(C64, C64); 2] {
        let areas = |trace: &[C64]| {
            (
                Self::integrate(&self.freqs_hz, trace, -j_hz, 0.0),
                Self::integrate(&self.freqs_hz, trace, 0.0, j_hz),
            )
        };
        [areas(&self.spin_a), areas(&self.spin_b)]
    }
}

/// Synthesize absorption-mode Lorentzian doublets whose line areas are the
/// closed-form peak integrals.
///
/// Each spin contributes two lines at ∓J/2 (relative to its carrier) with
/// full width at half maximum `1/(π T2*)` for that spin. This is a
/// verification and visualization aid: quantitative readout goes through
/// [`peak_integrals`] directly.
pub fn synthesize_spectrum(
    rho: &Matrix4c,
    j_hz: f64,
    t2s_a: f64,
    t2s_b: f64,
    grid: SpectrumGrid,
) -> Result<Spectrum, ExperimentError> {
    let hwhm_a = 1.0 / (2.0 * PI * t2s_a);
    let hwhm_b = 1.0 / (2.0 * PI * t2s_b);
    let margin = 60.0 * hwhm_a.max(hwhm_b);
    if grid.f_min > -(j_hz / 2.0 + margin) || grid.f_max < j_hz / 2.0 + margin {
        return Err(ExperimentError::InsufficientGrid {
            reason: format!(
                "grid [{}, {}] Hz must extend at least {margin:.2} Hz beyond the lines at ±{}",
                grid.f_min,
                grid.f_max,
                j_hz / 2.0
            ),
        });
    }
    if grid.points < 2 {
        return Err(ExperimentError::InsufficientGrid {
            reason: "need at least 2 samples".into(),
        });
    }
    let df = (grid.f_max - grid.f_min) / (grid.points - 1) as f64;
    let hwhm_min = hwhm_a.min(hwhm_b);
    if df > hwhm_min / 3.0 {
        return Err(ExperimentError::InsufficientGrid {
            reason: format!(
                "sample spacing {df:.4} Hz too coarse for half-width {hwhm_min:.4} Hz"
            ),
        });
    }
    let freqs: Vec<f64> = (0..grid.points).map(|k| grid.f_min + k as f64 * df).collect();
    let lines = peak_integrals(rho);
    // Unit-area absorption Lorentzian of half-width λ centred at f0.
    let shape = |f: f64, f0: f64, hwhm: f64| (hwhm / PI) / (hwhm * hwhm + (f - f0) * (f - f0));
    let trace = |low: C64, high: C64, hwhm: f64| -> Vec<C64> {
        freqs
            .iter()
            .map(|&f| {
                low * C64::new(shape(f, -j_hz / 2.0, hwhm), 0.0)
                    + high * C64::new(shape(f, j_hz / 2.0, hwhm), 0.0)
            })
            .collect()
    };
    Ok(Spectrum {
        spin_a: trace(lines.a_low, lines.a_high, hwhm_a),
        spin_b: trace(lines.b_low, lines.b_high, hwhm_b),
        freqs_hz: freqs,
    })
}

/// Coefficient indices observable in one readout acquisition: the
/// transverse data-spin terms split by the ancilla, and vice versa.
const TOMOGRAPHY_OBSERVABLES: [(usize, usize); 8] = [
    (1, 0),
    (1, 3),
    (2, 0),
    (2, 3),
    (0, 1),
    (3, 1),
    (0, 2),
    (3, 2),
];

/// The nine tomography readout unitaries: π/2 pulses from
/// `{identity, X, Y}` on each spin, ideal amplitudes.
fn tomography_pulses() -> Vec<Matrix4c> {
    let choices = [None, Some(Axis::X), Some(Axis::Y)];
    let mut pulses = Vec::with_capacity(9);
    for ca in choices {
        for cb in choices {
            let ua = match ca {
                None => Matrix4c::identity(),
                Some(axis) => rotation_unitary(Spin::A, axis, PI / 2.0, 1.0),
            };
            let ub = match cb {
                None => Matrix4c::identity(),
                Some(axis) => rotation_unitary(Spin::B, axis, PI / 2.0, 1.0),
            };
            pulses.push(ub * ua);
        }
    }
    pulses
}

/// Reconstruct a deviation density matrix from nine simulated readout
/// experiments.
///
/// Each experiment applies one pulse pair from `{identity, X, Y}` on each
/// spin and observes the eight spectrally accessible coefficients; the
/// resulting 72 linear equations are solved for the 15 unknown Pauli
/// coefficients by SVD least squares (the overall-identity coefficient of
/// a deviation state is fixed at zero). For ideal pulses the
/// reconstruction reproduces the direct decomposition to better than
/// 1e−10.
pub fn tomography(rho: &Matrix4c) -> Result<PauliCoeffs, ExperimentError> {
    let pulses = tomography_pulses();
    let unknowns: Vec<(usize, usize)> = (0..4)
        .flat_map(|i| (0..4).map(move |j| (i, j)))
        .filter(|&(i, j)| (i, j) != (0, 0))
        .collect();
    let rows = pulses.len() * TOMOGRAPHY_OBSERVABLES.len();
    let mut design = DMatrix::<f64>::zeros(rows, unknowns.len());
    let mut observed = DVector::<f64>::zeros(rows);
    for (e, u) in pulses.iter().enumerate() {
        let measured = pauli_decompose_unchecked(&(u * rho * u.adjoint()));
        for (o, &(oi, oj)) in TOMOGRAPHY_OBSERVABLES.iter().enumerate() {
            observed[e * 8 + o] = measured.c[oi][oj];
        }
    }
    for (col, &(ki, kj)) in unknowns.iter().enumerate() {
        let basis = pauli2(ki, kj);
        for (e, u) in pulses.iter().enumerate() {
            let pushed = pauli_decompose_unchecked(&(u * basis * u.adjoint()));
            for (o, &(oi, oj)) in TOMOGRAPHY_OBSERVABLES.iter().enumerate() {
                design[(e * 8 + o, col)] = pushed.c[oi][oj];
            }
        }
    }
    let svd = design.svd(true, true);
    if svd.singular_values.iter().any(|&s| s < 1e-9) {
        return Err(ExperimentError::SingularTomography);
    }
    let solution = svd
        .solve(&observed, 1e-12)
        .map_err(|_| ExperimentError::SingularTomography)?;
    let mut coeffs = PauliCoeffs::zeros();
    for (col, &(ki, kj)) in unknowns.iter().enumerate() {
        coeffs.c[ki][kj] = solution[col];
    }
    Ok(coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::amplitude_relax_z;
    use crate::qcore::{
        bloch_of, id4, max_abs_diff, partial_trace_b, sigma_x, sigma_y, C64, EXACT_TOL,
    };
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    const ORACLE_TOL: f64 = 1e-10;

    fn up() -> crate::qcore::Matrix2c {
        (id2() + sigma_z()).scale(0.5)
    }

    fn down() -> crate::qcore::Matrix2c {
        (id2() - sigma_z()).scale(0.5)
    }

    /// Closed-form final state of an ideal coded trial.
    fn rho5_coded_closed(theta: f64, p_a: f64, p_b: f64) -> Matrix4c {
        let acc = sigma_z().scale(theta.cos() * (1.0 - p_a - p_b + 2.0 * p_a * p_b))
            + sigma_x().scale(theta.sin() * (1.0 - p_a - p_b));
        let rej = sigma_z().scale(theta.cos() * (p_a + p_b - 2.0 * p_a * p_b))
            + sigma_x().scale(theta.sin() * (p_b - p_a));
        tensor(&acc, &up()) + tensor(&rej, &down())
    }

    /// Closed-form final state of an ideal control trial.
    fn rho5_control_closed(theta: f64, p_a: f64) -> Matrix4c {
        let a = sigma_z().scale(theta.cos()) + sigma_x().scale((1.0 - 2.0 * p_a) * theta.sin());
        tensor(&a, &up())
    }

    /// Closed-form encoded state before storage.
    fn rho3_coded_closed(theta: f64) -> Matrix4c {
        (tensor(&sigma_z(), &sigma_z()) + tensor(&sigma_y(), &sigma_x())).scale(theta.cos() / 2.0)
            + (tensor(&sigma_x(), &id2()) + tensor(&id2(), &sigma_y()))
                .scale(theta.sin() / 2.0)
    }

    /// Closed-form encoded state after storage damping.
    fn rho4_coded_closed(theta: f64, p_a: f64, p_b: f64) -> Matrix4c {
        let (da, db) = (1.0 - 2.0 * p_a, 1.0 - 2.0 * p_b);
        (tensor(&sigma_z(), &sigma_z()) + tensor(&sigma_y(), &sigma_x()).scale(da * db))
            .scale(theta.cos() / 2.0)
            + (tensor(&sigma_x(), &id2()).scale(da) + tensor(&id2(), &sigma_y()).scale(db))
                .scale(theta.sin() / 2.0)
    }

    /// Config in unit signal units whose storage damping hits the given
    /// probabilities exactly at t_d = 1.
    fn config_for_probs(p_a: f64, p_b: f64) -> ExperimentConfig {
        let t2s = |p: f64| {
            if p == 0.0 {
                f64::INFINITY
            } else {
                -1.0 / (1.0 - 2.0 * p).ln()
            }
        };
        ExperimentConfig {
            t2s_a: t2s(p_a),
            t2s_b: t2s(p_b),
            ..ExperimentConfig::unit_signal()
        }
    }

    fn random_deviation(seed: u64) -> Matrix4c {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut m = Matrix4c::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            }
        }
        let h = (m + m.adjoint()).scale(0.5);
        let t = h.trace().re / 4.0;
        h - id4().scale(t)
    }

    #[test]
    fn thermal_state_examples() {
        let rho = thermal_state(4.0, 1.0);
        let want = [2.5, 1.5, -1.5, -2.5];
        for (k, w) in want.iter().enumerate() {
            assert_abs_diff_eq!(rho[(k, k)].re, *w, epsilon = EXACT_TOL);
        }
        assert_abs_diff_eq!(rho.trace().re, 0.0, epsilon = EXACT_TOL);
        let a_only = thermal_state(4.0, 0.0);
        assert!(max_abs_diff(&a_only, &tensor(&sigma_z(), &id2()).scale(2.0)) < EXACT_TOL);
    }

    #[test]
    fn labeling_with_identity_is_thermal() {
        let rho_th = thermal_state(4.0, 1.0);
        let preps = vec![PulseSequence {
            name: "identity".into(),
            elements: vec![],
        }];
        let labeled = temporal_label(&rho_th, &preps, 195.0);
        assert!(max_abs_diff(&labeled, &rho_th) < EXACT_TOL);
    }

    #[test]
    fn labeling_sum_produces_effective_pure_term() {
        let j = 195.0;
        let rho_th = thermal_state(4.0, 1.0);
        let preps = vec![
            PulseSequence {
                name: "identity".into(),
                elements: vec![],
            },
            gate_library(Gate::CnTilde, j),
        ];
        let labeled = temporal_label(&rho_th, &preps, j);
        assert!(max_abs_diff(&labeled, &labeled_initial_state(4.0, 1.0)) < EXACT_TOL);
    }

    #[test]
    fn labeling_is_linear_in_the_prep_list() {
        let j = 195.0;
        let rho_th = thermal_state(4.0, 1.0);
        let preps = vec![
            gate_library(Gate::CnTilde, j),
            gate_library(Gate::HadamardB, j),
            gate_library(Gate::Chi, j),
        ];
        let joint = temporal_label(&rho_th, &preps, j);
        let mut sum = Matrix4c::zeros();
        for p in &preps {
            sum += temporal_label(&rho_th, std::slice::from_ref(p), j);
        }
        assert!(max_abs_diff(&joint, &sum) < EXACT_TOL);
    }

    #[test]
    fn storage_zero_duration_is_identity_even_with_bad_pulses() {
        let cfg = ExperimentConfig::unit_signal();
        let rho = random_deviation(1);
        let out = run_storage(&rho, 0.0, &cfg, Scales { a: 0.7, b: 1.3 });
        assert!(max_abs_diff(&out, &rho) < EXACT_TOL);
    }

    #[test]
    fn storage_damps_transverse_term_without_coupling_artifacts() {
        // σ_x on the data spin does not commute with the coupling, but the
        // refocused interval leaves only pure damping, at any duration.
        let cfg = ExperimentConfig::unit_signal();
        let rho = tensor(&sigma_x(), &id2());
        for t_d in [0.0123, 0.0615, 0.1, 0.308] {
            let p_a = cfg.damping_for(t_d).p_a;
            let out = run_storage(&rho, t_d, &cfg, Scales::IDEAL);
            let want = rho.scale(1.0 - 2.0 * p_a);
            assert!(
                max_abs_diff(&out, &want) < ORACLE_TOL,
                "t_d = {t_d}: residual {}",
                max_abs_diff(&out, &want)
            );
        }
    }

    #[test]
    fn storage_equals_pure_damping_for_ideal_pulses() {
        let cfg = ExperimentConfig::unit_signal();
        for seed in 0..30u64 {
            let rho = random_deviation(seed);
            let t_d = 0.2;
            let d = cfg.damping_for(t_d);
            let direct = phase_damp_2q(&rho, d.p_a, d.p_b).unwrap();
            let stored = run_storage(&rho, t_d, &cfg, Scales::IDEAL);
            assert!(max_abs_diff(&stored, &direct) < ORACLE_TOL);
        }
    }

    #[test]
    fn unrefocused_evolution_differs_by_coupling_correlation() {
        // Without refocusing, a transverse data-spin term at J·t = 1/2
        // converts fully into a two-spin correlation.
        let cfg = ExperimentConfig::unit_signal();
        let t_d = 0.5 / cfg.j_hz;
        let rho = tensor(&sigma_x(), &id2());
        let u = j_coupling_unitary(t_d, cfg.j_hz);
        let d = cfg.damping_for(t_d);
        let bare = phase_damp_2q(&(u * rho * u.adjoint()), d.p_a, d.p_b).unwrap();
        let correlated = tensor(&sigma_y(), &sigma_z()).scale(1.0 - 2.0 * d.p_a);
        assert!(max_abs_diff(&bare, &correlated) < ORACLE_TOL);
        let refocused = run_storage(&rho, t_d, &cfg, Scales::IDEAL);
        assert!(max_abs_diff(&bare, &refocused) > 0.5);
    }

    #[test]
    fn coded_trial_matches_closed_form_on_probability_lattice() {
        for i in 0..5 {
            for j in 0..5 {
                let (p_a, p_b) = (0.3 * i as f64 / 4.0, 0.3 * j as f64 / 4.0);
                let cfg = config_for_probs(p_a, p_b);
                for &theta in &cfg.theta_grid.clone() {
                    let got = run_trial(&cfg, theta, 1.0, Mode::Coded, Scales::IDEAL);
                    let want = rho5_coded_closed(theta, p_a, p_b);
                    assert!(
                        max_abs_diff(&got, &want) < ORACLE_TOL,
                        "θ = {theta}, p = ({p_a}, {p_b}): residual {}",
                        max_abs_diff(&got, &want)
                    );
                }
            }
        }
    }

    #[test]
    fn control_trial_matches_closed_form_on_probability_lattice() {
        for i in 0..5 {
            for j in 0..5 {
                let (p_a, p_b) = (0.3 * i as f64 / 4.0, 0.3 * j as f64 / 4.0);
                let cfg = config_for_probs(p_a, p_b);
                for &theta in &cfg.theta_grid.clone() {
                    let got = run_trial(&cfg, theta, 1.0, Mode::Control, Scales::IDEAL);
                    let want = rho5_control_closed(theta, p_a);
                    assert!(
                        max_abs_diff(&got, &want) < ORACLE_TOL,
                        "θ = {theta}, p = ({p_a}, {p_b}): residual {}",
                        max_abs_diff(&got, &want)
                    );
                }
            }
        }
    }

    #[test]
    fn intermediate_stages_match_closed_forms() {
        let (p_a, p_b) = (0.21, 0.12);
        let cfg = config_for_probs(p_a, p_b);
        for &theta in &[0.0, 0.3, PI / 2.0, 2.2] {
            let rho3 = run_to_stage(&cfg, theta, 1.0, Mode::Coded, Scales::IDEAL, Stage::Rho3);
            assert!(max_abs_diff(&rho3, &rho3_coded_closed(theta)) < ORACLE_TOL);
            let rho4 = run_to_stage(&cfg, theta, 1.0, Mode::Coded, Scales::IDEAL, Stage::Rho4);
            assert!(max_abs_diff(&rho4, &rho4_coded_closed(theta, p_a, p_b)) < ORACLE_TOL);
        }
    }

    #[test]
    fn control_stages_collapse_where_gates_are_omitted() {
        let cfg = ExperimentConfig::unit_signal();
        let theta = 0.7;
        let t_d = 0.0615;
        let r1 = run_to_stage(&cfg, theta, t_d, Mode::Control, Scales::IDEAL, Stage::Rho1);
        let r3 = run_to_stage(&cfg, theta, t_d, Mode::Control, Scales::IDEAL, Stage::Rho3);
        let r4 = run_to_stage(&cfg, theta, t_d, Mode::Control, Scales::IDEAL, Stage::Rho4);
        let r5 = run_to_stage(&cfg, theta, t_d, Mode::Control, Scales::IDEAL, Stage::Rho5);
        assert!(max_abs_diff(&r1, &r3) < EXACT_TOL);
        assert!(max_abs_diff(&r4, &r5) < EXACT_TOL);
    }

    #[test]
    fn zero_storage_trial_returns_the_input_in_both_modes() {
        let cfg = ExperimentConfig::unit_signal();
        for &theta in &cfg.theta_grid.clone() {
            let input = run_to_stage(&cfg, theta, 0.0, Mode::Coded, Scales::IDEAL, Stage::Rho1);
            let coded = run_trial(&cfg, theta, 0.0, Mode::Coded, Scales::IDEAL);
            let control = run_trial(&cfg, theta, 0.0, Mode::Control, Scales::IDEAL);
            assert!(max_abs_diff(&coded, &input) < ORACLE_TOL);
            assert!(max_abs_diff(&control, &input) < ORACLE_TOL);
        }
    }

    #[test]
    fn readout_of_thermal_state_gives_equal_positive_lines() {
        let decoded = readout(&thermal_state(4.0, 1.0));
        assert_abs_diff_eq!(decoded.accepted.z, 2.0, epsilon = EXACT_TOL);
        assert_abs_diff_eq!(decoded.rejected.z, 2.0, epsilon = EXACT_TOL);
        assert_abs_diff_eq!(decoded.accepted.x, 0.0, epsilon = EXACT_TOL);
        assert_abs_diff_eq!(decoded.rejected.x, 0.0, epsilon = EXACT_TOL);
    }

    #[test]
    fn readout_after_controlled_not_gives_opposite_lines() {
        let j = 195.0;
        let cn = compile(&gate_library(Gate::CnTilde, j), j, Scales::IDEAL);
        let rho = cn * thermal_state(4.0, 1.0) * cn.adjoint();
        let pulse = rotation_unitary(Spin::A, Axis::X, PI / 2.0, 1.0);
        let lines = peak_integrals(&(pulse * rho * pulse.adjoint()));
        assert_abs_diff_eq!(lines.a_low.re, 2.0, epsilon = EXACT_TOL);
        assert_abs_diff_eq!(lines.a_high.re, -2.0, epsilon = EXACT_TOL);
        assert_abs_diff_eq!(lines.a_low.im, 0.0, epsilon = EXACT_TOL);
        assert_abs_diff_eq!(lines.a_high.im, 0.0, epsilon = EXACT_TOL);
    }

    #[test]
    fn table_round_trip_for_coded_outputs() {
        for (p_a, p_b) in [(0.0, 0.0), (0.1, 0.05), (0.2, 0.3), (0.269, 0.269)] {
            let cfg = config_for_probs(p_a, p_b);
            for &theta in &cfg.theta_grid.clone() {
                let decoded = readout(&run_trial(&cfg, theta, 1.0, Mode::Coded, Scales::IDEAL));
                let z_want = (1.0 - p_a - p_b + 2.0 * p_a * p_b) * theta.cos();
                let x_want = (1.0 - p_a - p_b) * theta.sin();
                assert_abs_diff_eq!(decoded.accepted.z, z_want, epsilon = ORACLE_TOL);
                assert_abs_diff_eq!(decoded.accepted.x, x_want, epsilon = ORACLE_TOL);
                let zr_want = (p_a + p_b - 2.0 * p_a * p_b) * theta.cos();
                let xr_want = (p_b - p_a) * theta.sin();
                assert_abs_diff_eq!(decoded.rejected.z, zr_want, epsilon = ORACLE_TOL);
                assert_abs_diff_eq!(decoded.rejected.x, xr_want, epsilon = ORACLE_TOL);
            }
        }
    }

    #[test]
    fn table_round_trip_for_control_outputs() {
        for (p_a, p_b) in [(0.1, 0.05), (0.269, 0.2)] {
            let cfg = config_for_probs(p_a, p_b);
            for &theta in &cfg.theta_grid.clone() {
                let decoded =
                    readout(&run_trial(&cfg, theta, 1.0, Mode::Control, Scales::IDEAL));
                assert_abs_diff_eq!(decoded.accepted.z, theta.cos(), epsilon = ORACLE_TOL);
                assert_abs_diff_eq!(
                    decoded.accepted.x,
                    (1.0 - 2.0 * p_a) * theta.sin(),
                    epsilon = ORACLE_TOL
                );
            }
        }
    }

    #[test]
    fn accepted_and_rejected_reconstruct_the_reduced_state() {
        for seed in 0..50u64 {
            let rho = random_deviation(seed);
            let decoded = readout(&rho);
            let reduced = bloch_of(&partial_trace_b(&rho));
            assert_abs_diff_eq!(
                decoded.accepted.z + decoded.rejected.z,
                reduced.z / 2.0,
                epsilon = 1e-9
            );
            assert_abs_diff_eq!(
                decoded.accepted.x + decoded.rejected.x,
                reduced.x / 2.0,
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn rejected_output_vanishes_for_equator_input_with_equal_damping() {
        let cfg = config_for_probs(0.2, 0.2);
        let decoded = readout(&run_trial(&cfg, PI / 2.0, 1.0, Mode::Coded, Scales::IDEAL));
        assert_abs_diff_eq!(decoded.rejected.z, 0.0, epsilon = ORACLE_TOL);
        assert_abs_diff_eq!(decoded.rejected.x, 0.0, epsilon = ORACLE_TOL);
    }

    #[test]
    fn ancilla_thermal_term_is_invisible_in_data_spin_lines() {
        // The labeled state's ancilla term never contributes to the data
        // spin's spectrum, through either pipeline.
        let cfg = ExperimentConfig {
            omega_a: 0.0,
            omega_b: 1.0,
            ..ExperimentConfig::default()
        };
        for mode in [Mode::Coded, Mode::Control] {
            for &theta in &[0.0, 0.9, PI / 2.0] {
                let decoded = readout(&run_trial(&cfg, theta, 0.123, mode, Scales::IDEAL));
                for v in [
                    decoded.accepted.z,
                    decoded.accepted.x,
                    decoded.rejected.z,
                    decoded.rejected.x,
                ] {
                    assert!(v.abs() < 1e-12, "{mode} θ={theta}: leak {v}");
                }
            }
        }
    }

    #[test]
    fn acceptance_weight_matches_projected_trace_of_true_density_matrix() {
        // Run a genuine unit-trace state through encode→damp→decode and
        // compare the ancilla-|0⟩ block trace to the closed form.
        let j = 195.0;
        let enc = compile(&gate_library(Gate::UEnc, j), j, Scales::IDEAL);
        let dec = compile(&gate_library(Gate::UDec, j), j, Scales::IDEAL);
        for (p_a, p_b) in [(0.0, 0.0), (0.1, 0.3), (0.269, 0.269), (0.5, 0.25)] {
            for theta in [0.0, 0.8, PI / 2.0] {
                let prep = rotation_unitary(Spin::A, Axis::Y, theta, 1.0);
                let mut rho = Matrix4c::zeros();
                rho[(0, 0)] = C64::new(1.0, 0.0); // |00⟩⟨00|
                let rho = prep * rho * prep.adjoint();
                let rho = enc * rho * enc.adjoint();
                let rho = phase_damp_2q(&rho, p_a, p_b).unwrap();
                let rho = dec * rho * dec.adjoint();
                let block = crate::qcore::project_ancilla(&rho, crate::qcore::AncillaBit::Zero);
                let damping = DampingParams::from_probs(p_a, p_b).unwrap();
                assert_abs_diff_eq!(
                    block.trace().re,
                    acceptance_weight(Mode::Coded, &damping),
                    epsilon = ORACLE_TOL
                );
            }
        }
        let damping = DampingParams::from_probs(0.3, 0.1).unwrap();
        assert_abs_diff_eq!(acceptance_weight(Mode::Control, &damping), 1.0, epsilon = 0.0);
    }

    #[test]
    fn pipeline_is_unital_without_amplitude_relaxation() {
        let cfg = ExperimentConfig::unit_signal();
        // Conjugations and phase damping all fix the identity; check the
        // full storage map on it.
        let out = run_storage(&id4(), 0.308, &cfg, Scales::IDEAL);
        assert!(max_abs_diff(&out, &id4()) < EXACT_TOL);
    }

    #[test]
    fn amplitude_relaxation_pulls_longitudinal_terms_toward_equilibrium() {
        let mut cfg = ExperimentConfig::unit_signal();
        cfg.noise.amplitude = Some(AmplitudeRelax {
            t1_a: 9.0,
            t1_b: 13.5,
            z_inf: 1.0,
        });
        let t_d = 0.308;
        // Inverted data-spin magnetization recovers toward +ω_a/2.
        let rho = tensor(&sigma_z(), &id2()).scale(-0.5);
        let out = run_storage(&rho, t_d, &cfg, Scales::IDEAL);
        let c = pauli_decompose_unchecked(&out).c;
        let eq = cfg.omega_a / 2.0;
        // Two halves of t_d/2 each: closed form for the composed relaxation.
        let want = {
            let half = |z: f64| eq + (z - eq) * (-t_d / 2.0 / 9.0).exp();
            half(half(-0.5))
        };
        assert_abs_diff_eq!(c[3][0], want, epsilon = ORACLE_TOL);
        assert_abs_diff_eq!(
            c[3][0],
            amplitude_relax_z(-0.5 / eq, t_d, 9.0) * eq,
            epsilon = ORACLE_TOL
        );
        // Disabled by default: nothing moves.
        let cfg_off = ExperimentConfig::unit_signal();
        let out_off = run_storage(&rho, t_d, &cfg_off, Scales::IDEAL);
        assert!(max_abs_diff(&out_off, &rho) < EXACT_TOL);
    }

    #[test]
    fn averaged_trial_without_rf_matches_single_ideal_run() {
        let cfg = ExperimentConfig::unit_signal();
        let avg = averaged_trial(&cfg, 0.9, 0.123, Mode::Coded);
        let direct =
            pauli_decompose_unchecked(&run_trial(&cfg, 0.9, 0.123, Mode::Coded, Scales::IDEAL));
        assert!(avg.max_abs_diff(&direct) < EXACT_TOL);
    }

    #[test]
    fn averaged_trial_with_rf_attenuates_the_equator_output() {
        let mut cfg = ExperimentConfig::unit_signal();
        cfg.noise.rf = Some(RfInhomogeneity::calibrated(0.96, 0.92, 5.0, 64).unwrap());
        let ideal = averaged_trial(&ExperimentConfig::unit_signal(), PI / 2.0, 0.0, Mode::Coded);
        let blurred = averaged_trial(&cfg, PI / 2.0, 0.0, Mode::Coded);
        let x_ideal = ideal.c[1][0] + ideal.c[1][3];
        let x_blurred = blurred.c[1][0] + blurred.c[1][3];
        assert!(x_blurred < x_ideal, "inhomogeneity must attenuate: {x_blurred} vs {x_ideal}");
        assert!(x_blurred > 0.5, "attenuation should be mild, got {x_blurred}");
    }

    #[test]
    fn peak_integrals_are_real_for_states_without_x_terms() {
        // Zero the coefficients that feed imaginary parts and damp nothing.
        let mut coeffs = pauli_decompose_unchecked(&random_deviation(8));
        for (i, j) in [(1, 0), (0, 1), (1, 3), (3, 1)] {
            coeffs.c[i][j] = 0.0;
        }
        let lines = peak_integrals(&coeffs.reconstruct());
        for v in [lines.a_low, lines.a_high, lines.b_low, lines.b_high] {
            assert_abs_diff_eq!(v.im, 0.0, epsilon = EXACT_TOL);
        }
    }

    #[test]
    fn spectrum_of_single_transverse_term_has_equal_area_lines() {
        let rho = tensor(&sigma_y(), &id2()); // only c_20 ≠ 0
        let grid = SpectrumGrid::default_for(195.0, 0.35, 0.50);
        let spectrum = synthesize_spectrum(&rho, 195.0, 0.35, 0.50, grid).unwrap();
        let [(a_low, a_high), (b_low, b_high)] = spectrum.line_areas(195.0);
        assert_abs_diff_eq!(a_low.re, a_high.re, epsilon = 1e-6);
        assert!(a_low.re < 0.0, "both lines carry −c_20");
        assert!((a_low.re - (-1.0)).abs() < 0.01);
        assert!(b_low.norm() < 1e-9 && b_high.norm() < 1e-9);
    }

    #[test]
    fn spectrum_of_zero_state_is_flat() {
        let grid = SpectrumGrid::default_for(195.0, 0.35, 0.50);
        let spectrum = synthesize_spectrum(&Matrix4c::zeros(), 195.0, 0.35, 0.50, grid).unwrap();
        assert!(spectrum.spin_a.iter().all(|z| z.norm() == 0.0));
        assert!(spectrum.spin_b.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn spectrum_areas_reproduce_closed_form_integrals_on_random_states() {
        let grid = SpectrumGrid::default_for(195.0, 0.35, 0.50);
        for seed in 0..10u64 {
            let rho = random_deviation(seed);
            let want = peak_integrals(&rho);
            let spectrum = synthesize_spectrum(&rho, 195.0, 0.35, 0.50, grid).unwrap();
            let [(a_low, a_high), (b_low, b_high)] = spectrum.line_areas(195.0);
            for (got, want) in [
                (a_low, want.a_low),
                (a_high, want.a_high),
                (b_low, want.b_low),
                (b_high, want.b_high),
            ] {
                let scale = want.norm().max(0.1);
                assert!(
                    (got - want).norm() / scale < 0.01,
                    "seed {seed}: area {got} vs closed form {want}"
                );
            }
        }
    }

    #[test]
    fn spectrum_grid_validation() {
        let rho = random_deviation(3);
        // Too narrow.
        let narrow = SpectrumGrid {
            f_min: -100.0,
            f_max: 100.0,
            points: 4001,
        };
        assert!(synthesize_spectrum(&rho, 195.0, 0.35, 0.50, narrow).is_err());
        // Too coarse.
        let coarse = SpectrumGrid {
            f_min: -200.0,
            f_max: 200.0,
            points: 101,
        };
        assert!(synthesize_spectrum(&rho, 195.0, 0.35, 0.50, coarse).is_err());
    }

    #[test]
    fn tomography_recovers_diagonal_thermal_state() {
        let coeffs = tomography(&thermal_state(4.0, 1.0)).unwrap();
        assert_abs_diff_eq!(coeffs.c[3][0], 2.0, epsilon = 1e-10);
        assert_abs_diff_eq!(coeffs.c[0][3], 0.5, epsilon = 1e-10);
        for i in 0..4 {
            for j in 0..4 {
                if (i, j) != (3, 0) && (i, j) != (0, 3) {
                    assert_abs_diff_eq!(coeffs.c[i][j], 0.0, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn tomography_recovers_encoded_equator_state() {
        let cfg = ExperimentConfig::unit_signal();
        let rho3 = run_to_stage(&cfg, PI / 2.0, 0.0, Mode::Coded, Scales::IDEAL, Stage::Rho3);
        let coeffs = tomography(&rho3).unwrap();
        assert_abs_diff_eq!(coeffs.c[1][0], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(coeffs.c[0][2], 0.5, epsilon = 1e-10);
        let direct = pauli_decompose_unchecked(&rho3);
        assert!(coeffs.max_abs_diff(&direct) < 1e-10);
    }

    #[test]
    fn tomography_round_trips_random_deviations() {
        for seed in 0..100u64 {
            let rho = random_deviation(seed);
            let got = tomography(&rho).unwrap();
            let want = pauli_decompose_unchecked(&rho);
            assert!(
                got.max_abs_diff(&want) < 1e-10,
                "seed {seed}: defect {}",
                got.max_abs_diff(&want)
            );
        }
    }

    #[test]
    fn tomography_round_trips_every_pipeline_stage() {
        let cfg = config_for_probs(0.18, 0.07);
        for stage in [Stage::Rho0, Stage::Rho1, Stage::Rho3, Stage::Rho4, Stage::Rho5] {
            let rho = run_to_stage(&cfg, 1.1, 1.0, Mode::Coded, Scales::IDEAL, stage);
            let got = tomography(&rho).unwrap();
            let want = pauli_decompose_unchecked(&rho);
            assert!(got.max_abs_diff(&want) < 1e-10, "stage {stage}");
        }
    }

    proptest! {
        /// Trials preserve the trace of the deviation state (zero) and
        /// Hermiticity, for any angle and duration.
        #[test]
        fn trials_preserve_trace_and_hermiticity(
            theta in 0.0f64..PI,
            t_d in 0.0f64..0.4,
            coded in prop::bool::ANY,
        ) {
            let cfg = ExperimentConfig::unit_signal();
            let mode = if coded { Mode::Coded } else { Mode::Control };
            let rho = run_trial(&cfg, theta, t_d, mode, Scales::IDEAL);
            prop_assert!(rho.trace().norm() < 1e-10);
            prop_assert!(crate::qcore::hermitian_defect4(&rho) < 1e-10);
        }

        /// Accepted and rejected components always sum to the reduced state.
        #[test]
        fn decoded_components_always_reconstruct(seed in 0u64..500) {
            let rho = random_deviation(seed);
            let decoded = readout(&rho);
            let reduced = bloch_of(&partial_trace_b(&rho));
            prop_assert!((decoded.accepted.z + decoded.rejected.z - reduced.z / 2.0).abs() < 1e-9);
            prop_assert!((decoded.accepted.x + decoded.rejected.x - reduced.x / 2.0).abs() < 1e-9);
        }
    }
}
