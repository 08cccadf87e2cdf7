//! Noise processes: independent two-spin phase damping in operator-sum
//! form, phenomenological amplitude relaxation, and a Lorentzian
//! RF-field-inhomogeneity ensemble with calibration and quadrature
//! averaging.
//!
//! Phase damping with probability `p` maps `ρ ↦ (1−p)ρ + p σ_z ρ σ_z`,
//! leaving populations untouched and shrinking coherences by `(1−2p)`.
//! Over a storage time `t` with dephasing constant `T2*`,
//! `p = (1 − e^{−t/T2*})/2`, so `1−2p = e^{−t/T2*}`.
//!
//! The RF model draws a per-spin angle-scale deviation `δ` from a
//! truncated, renormalized Lorentzian of half-width `γ`; every pulse on
//! that spin within one experiment sees the same `1+δ` factor (perfect
//! pulse-to-pulse correlation), and the two spins' deviations are
//! independent. Ensemble averages are tensor-product Gauss–Legendre
//! quadratures over the two truncated densities.

use crate::qcore::{pauli2, Matrix2c, Matrix4c, PauliCoeffs};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Errors raised by channel construction and calibration.
#[derive(Debug, Error)]
pub enum ChannelError {
    /// A damping probability left `[0, 1/2]`.
    #[error("damping probability {p} outside [0, 1/2]")]
    ProbabilityOutOfRange { p: f64 },
    /// A calibration target left its valid range `(0.5, 1]`.
    #[error("attenuation target {target} outside (0.5, 1]")]
    TargetOutOfRange { target: f64 },
    /// Bisection could not bracket the calibration target.
    #[error("no half-width in [0, {max}] reproduces attenuation {target}")]
    NoRootInBracket { target: f64, max: f64 },
}

/// Per-spin phase-damping strength over one storage interval.
///
/// Maintains the defining relation `p_i = (1 − e^{−t_d/T2*_i})/2` for both
/// spins; `p_i ∈ [0, 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DampingParams {
    /// Error probability on spin `A` over the interval.
    pub p_a: f64,
    /// Error probability on spin `B` over the interval.
    pub p_b: f64,
    /// Interval duration in seconds.
    pub t_d: f64,
    /// Effective dephasing time of spin `A`, seconds.
    pub t2s_a: f64,
    /// Effective dephasing time of spin `B`, seconds.
    pub t2s_b: f64,
}

impl DampingParams {
    /// Damping over `t_d` seconds with per-spin dephasing times.
    pub fn from_times(t_d: f64, t2s_a: f64, t2s_b: f64) -> Self {
        let p = |t2s: f64| (1.0 - (-t_d / t2s).exp()) / 2.0;
        DampingParams {
            p_a: p(t2s_a),
            p_b: p(t2s_b),
            t_d,
            t2s_a,
            t2s_b,
        }
    }

    /// Damping stated directly as probabilities.
    ///
    /// Synthesizes consistent timing data (`t_d = 1 s` and
    /// `T2*_i = −1/ln(1−2p_i)`, infinite for `p_i = 0`) so the defining
    /// relation still holds exactly.
    pub fn from_probs(p_a: f64, p_b: f64) -> Result<Self, ChannelError> {
        for p in [p_a, p_b] {
            if !(0.0..=0.5).contains(&p) {
                return Err(ChannelError::ProbabilityOutOfRange { p });
            }
        }
        let t2s = |p: f64| {
            if p == 0.0 {
                f64::INFINITY
            } else {
                -1.0 / (1.0 - 2.0 * p).ln()
            }
        };
        Ok(DampingParams {
            p_a,
            p_b,
            t_d: 1.0,
            t2s_a: t2s(p_a),
            t2s_b: t2s(p_b),
        })
    }
}

/// Phenomenological longitudinal relaxation parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeRelax {
    /// Longitudinal relaxation time of spin `A`, seconds (> 0).
    pub t1_a: f64,
    /// Longitudinal relaxation time of spin `B`, seconds (> 0).
    pub t1_b: f64,
    /// Equilibrium z magnetization each spin relaxes toward (nominally +1,
    /// in units of that spin's thermal polarization).
    pub z_inf: f64,
}

fn check_probability(p: f64) -> Result<(), ChannelError> {
    if (0.0..=0.5).contains(&p) {
        Ok(())
    } else {
        Err(ChannelError::ProbabilityOutOfRange { p })
    }
}

/// Single-spin phase damping `ρ ↦ (1−p)ρ + p σ_z ρ σ_z`.
///
/// Diagonal entries are unchanged; off-diagonals shrink by `(1−2p)`.
pub fn phase_damp_1q(rho: &Matrix2c, p: f64) -> Result<Matrix2c, ChannelError> {
    check_probability(p)?;
    let sz = crate::qcore::sigma_z();
    Ok(rho.scale(1.0 - p) + (sz * rho * sz).scale(p))
}

/// Independent two-spin phase damping: the four-term operator sum with
/// weights `(1−p_a)(1−p_b)`, `(1−p_a)p_b`, `p_a(1−p_b)`, `p_a p_b` on the
/// error patterns `I⊗I`, `I⊗σ_z`, `σ_z⊗I`, `σ_z⊗σ_z`.
///
/// Trace-preserving, Hermiticity-preserving, and unital; commutes with
/// scalar-coupling evolution (all operators involved are diagonal in the
/// computational basis).
pub fn phase_damp_2q(rho: &Matrix4c, p_a: f64, p_b: f64) -> Result<Matrix4c, ChannelError> {
    check_probability(p_a)?;
    check_probability(p_b)?;
    let ii = rho;
    let iz = pauli2(0, 3) * rho * pauli2(0, 3);
    let zi = pauli2(3, 0) * rho * pauli2(3, 0);
    let zz = pauli2(3, 3) * rho * pauli2(3, 3);
    Ok(ii.scale((1.0 - p_a) * (1.0 - p_b))
        + iz.scale((1.0 - p_a) * p_b)
        + zi.scale(p_a * (1.0 - p_b))
        + zz.scale(p_a * p_b))
}

/// Longitudinal relaxation of a z component toward equilibrium `z(∞) = 1`:
/// `z(t) = 1 + (z(0) − 1)·e^{−t/T1}`.
pub fn amplitude_relax_z(bloch_z: f64, t: f64, t1: f64) -> f64 {
    debug_assert!(t1 > 0.0, "T1 must be positive");
    debug_assert!(t >= 0.0, "time must be nonnegative");
    1.0 + (bloch_z - 1.0) * (-t / t1).exp()
}

/// Lorentzian RF-field-inhomogeneity ensemble for the two spins.
///
/// `gamma_*` are the Lorentzian half-widths of the per-spin angle-scale
/// deviations; the density is truncated at `±truncation·γ` and
/// renormalized. `nodes` is the Gauss–Legendre node count per spin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfInhomogeneity {
    pub gamma_a: f64,
    pub gamma_b: f64,
    /// Ensemble-average transverse signal after a nominal π/2 pulse on `A`.
    pub target_attenuation_a: f64,
    /// Ensemble-average transverse signal after a nominal π/2 pulse on `B`.
    pub target_attenuation_b: f64,
    /// Support half-width in units of `γ` (default 5).
    pub truncation: f64,
    /// Quadrature nodes per spin (≥ 2; default 64).
    pub nodes: usize,
}

/// Default truncation: ±5γ.
pub const DEFAULT_TRUNCATION: f64 = 5.0;
/// Default quadrature nodes per spin.
pub const DEFAULT_NODES: usize = 64;

impl RfInhomogeneity {
    /// Calibrate both half-widths so the ensemble reproduces the target π/2
    /// attenuations.
    pub fn calibrated(
        target_attenuation_a: f64,
        target_attenuation_b: f64,
        truncation: f64,
        nodes: usize,
    ) -> Result<Self, ChannelError> {
        Ok(RfInhomogeneity {
            gamma_a: calibrate_gamma(target_attenuation_a, truncation, nodes)?,
            gamma_b: calibrate_gamma(target_attenuation_b, truncation, nodes)?,
            target_attenuation_a,
            target_attenuation_b,
            truncation,
            nodes,
        })
    }

    /// A zero-width (perfectly homogeneous) ensemble.
    pub fn degenerate() -> Self {
        RfInhomogeneity {
            gamma_a: 0.0,
            gamma_b: 0.0,
            target_attenuation_a: 1.0,
            target_attenuation_b: 1.0,
            truncation: DEFAULT_TRUNCATION,
            nodes: DEFAULT_NODES,
        }
    }
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`.
///
/// Newton iteration on the Legendre recurrence; exact (to roundoff) for
/// polynomials of degree ≤ 2n−1.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "node count must be positive");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    // Roots are symmetric; solve the upper half and mirror.
    for i in 0..n.div_ceil(2) {
        // Tricomi-style initial guess for the i-th root (descending order).
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // Evaluate P_n(x) and P_n'(x) via the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        // Recompute the derivative at the converged root for the weight.
        let mut p0 = 1.0;
        let mut p1 = x;
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        weights[i] = w;
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Quadrature abscissas and normalized weights for averaging over one
/// spin's truncated Lorentzian deviation density.
///
/// Returns `(δ_k, w_k)` with `Σ w_k = 1`; a zero half-width collapses to
/// the single node `(0, 1)`.
pub fn lorentzian_nodes(gamma: f64, truncation: f64, n: usize) -> Vec<(f64, f64)> {
    debug_assert!(gamma >= 0.0, "half-width must be nonnegative");
    if gamma == 0.0 {
        return vec![(0.0, 1.0)];
    }
    let (xs, ws) = gauss_legendre(n);
    let half_support = truncation * gamma;
    let mut out: Vec<(f64, f64)> = xs
        .iter()
        .zip(&ws)
        .map(|(&x, &w)| {
            let delta = half_support * x;
            let density = 1.0 / (1.0 + (delta / gamma).powi(2));
            (delta, w * density)
        })
        .collect();
    let total: f64 = out.iter().map(|(_, w)| w).sum();
    for (_, w) in &mut out {
        *w /= total;
    }
    out
}

/// Ensemble-average transverse signal after a nominal π/2 pulse whose angle
/// scale deviation is drawn from the truncated Lorentzian of half-width
/// `gamma`: `E[sin((1+δ)·π/2)]`.
pub fn pi_half_attenuation(gamma: f64, truncation: f64, nodes: usize) -> f64 {
    lorentzian_nodes(gamma, truncation, nodes)
        .iter()
        .map(|(delta, w)| w * ((1.0 + delta) * PI / 2.0).sin())
        .sum()
}

/// Find the Lorentzian half-width whose truncated ensemble reproduces the
/// measured π/2-pulse attenuation.
///
/// Bisection on `γ ∈ [0, 0.5]` to an interval width of `1e−6`; the
/// attenuation is monotone decreasing in `γ` over this bracket. A target
/// of exactly 1 returns `γ = 0`.
pub fn calibrate_gamma(target: f64, truncation: f64, nodes: usize) -> Result<f64, ChannelError> {
    if !(target > 0.5 && target <= 1.0) {
        return Err(ChannelError::TargetOutOfRange { target });
    }
    if target == 1.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    if pi_half_attenuation(hi, truncation, nodes) > target {
        return Err(ChannelError::NoRootInBracket { target, max: hi });
    }
    while hi - lo > 1e-6 {
        let mid = 0.5 * (lo + hi);
        if pi_half_attenuation(mid, truncation, nodes) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Average an experiment over the two-spin RF ensemble.
///
/// `experiment` maps per-spin angle scale factors `(scale_a, scale_b)` to
/// the Pauli coefficients of its output state; it must be deterministic in
/// its arguments. The scales are held fixed within one evaluation (perfect
/// pulse-to-pulse correlation) and averaged over the tensor product of the
/// two independent truncated Lorentzian densities.
///
/// Quadrature nodes are evaluated in parallel; the reduction order is fixed
/// by node index, so results are bitwise deterministic regardless of thread
/// count. A degenerate (zero-width) ensemble returns `experiment(1, 1)`
/// exactly.
pub fn ensemble_average<F>(experiment: F, rf: &RfInhomogeneity) -> PauliCoeffs
where
    F: Fn(f64, f64) -> PauliCoeffs + Sync,
{
    if rf.gamma_a == 0.0 && rf.gamma_b == 0.0 {
        return experiment(1.0, 1.0);
    }
    let nodes_a = lorentzian_nodes(rf.gamma_a, rf.truncation, rf.nodes);
    let nodes_b = lorentzian_nodes(rf.gamma_b, rf.truncation, rf.nodes);
    let pairs: Vec<(f64, f64, f64)> = nodes_a
        .iter()
        .flat_map(|&(da, wa)| nodes_b.iter().map(move |&(db, wb)| (da, db, wa * wb)))
        .collect();
    let evaluated: Vec<(f64, PauliCoeffs)> = pairs
        .par_iter()
        .map(|&(da, db, w)| (w, experiment(1.0 + da, 1.0 + db)))
        .collect();
    let mut acc = PauliCoeffs::zeros();
    for (w, coeffs) in &evaluated {
        acc.add_scaled(coeffs, *w);
    }
    acc
}
