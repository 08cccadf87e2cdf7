//! Quantitative analysis of trial outputs: intensity ellipse fits,
//! ellipticity and fidelity measures, weighted quadratic trend fits, and
//! the detection-versus-correction resource tradeoff.
//!
//! The central observable is the intensity `I(θ) = z² + x²` of the decoded
//! output across the preparation semicircle, fitted to
//!
//! ```text
//! I(θ) = (A + B·sin²(θ+D)) · (1 − C·(θ+D))
//! ```
//!
//! which captures an ellipse (A, B), a linear signal droop in θ (C), and a
//! constant angular offset (D). Dephasing shrinks the equatorial axis, so
//! the ellipticity ε = √(I(0)/I(π/2)) ≥ 1 measures the accumulated error,
//! and `F = (1 + 1/ε)/2` converts it into a worst-case overlap fidelity.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Errors raised by fitting and fidelity evaluation.
#[derive(Debug, Error)]
pub enum AnalysisError {
    /// Too few or degenerate sample points for the requested fit.
    #[error("degenerate fit input: {reason}")]
    DegenerateGrid { reason: String },
    /// The minimizer could not find a downhill step.
    #[error("fit failed to converge: {reason}")]
    NonConvergence { reason: String },
    /// The fitted intensity model is not positive where it must be.
    #[error("fitted model nonpositive at θ = {theta}")]
    NonpositiveModel { theta: f64 },
    /// A required reference point (θ = 0) is missing or unusable.
    #[error("missing reference: {reason}")]
    MissingReference { reason: String },
    /// The linear system of a polynomial fit lost rank.
    #[error("rank-deficient design matrix")]
    RankDeficient,
}

/// Fitted parameters of the intensity model
/// `I(θ) = (A + B sin²(θ+D))(1 − C(θ+D))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    /// Root-mean-square intensity residual.
    pub residual_rms: f64,
    pub se_a: f64,
    pub se_b: f64,
    pub se_c: f64,
    pub se_d: f64,
}

impl EllipseFit {
    /// Evaluate the fitted intensity model.
    pub fn model(&self, theta: f64) -> f64 {
        let t = theta + self.d;
        (self.a + self.b * t.sin().powi(2)) * (1.0 - self.c * t)
    }
}

fn model_value(p: &[f64; 4], theta: f64) -> f64 {
    let t = theta + p[3];
    (p[0] + p[1] * t.sin().powi(2)) * (1.0 - p[2] * t)
}

fn model_gradient(p: &[f64; 4], theta: f64) -> [f64; 4] {
    let t = theta + p[3];
    let s2 = t.sin().powi(2);
    let droop = 1.0 - p[2] * t;
    let shape = p[0] + p[1] * s2;
    [
        droop,
        s2 * droop,
        -shape * t,
        p[1] * (2.0 * t).sin() * droop - p[2] * shape,
    ]
}

/// Relative threshold below which the ellipse amplitude `B` is considered
/// zero and the angular offset `D` becomes unidentifiable.
const D_FREEZE_RATIO: f64 = 1e-6;

/// Fit the intensity model to decoded outputs `(θ, z, x)` by
/// Levenberg–Marquardt least squares on `I = z² + x²`.
///
/// The initial guess takes `A` from the sample nearest θ = 0, `B` from the
/// intensity drop at the sample nearest θ = π/2, and `C = D = 0`.
/// Iteration stops when the relative parameter step falls below 1e−10 or
/// after 200 iterations. The offset `D` is frozen at zero whenever
/// `|B| < 1e−6·|A|`, where it is unidentifiable.
pub fn fit_ellipse(points: &[(f64, f64, f64)]) -> Result<EllipseFit, AnalysisError> {
    let n = points.len();
    if n < 5 {
        return Err(AnalysisError::DegenerateGrid {
            reason: format!("need at least 5 points, got {n}"),
        });
    }
    let thetas: Vec<f64> = points.iter().map(|&(t, _, _)| t).collect();
    let intensities: Vec<f64> = points.iter().map(|&(_, z, x)| z * z + x * x).collect();
    let span = thetas.iter().cloned().fold(f64::MIN, f64::max)
        - thetas.iter().cloned().fold(f64::MAX, f64::min);
    if span < 1e-9 {
        return Err(AnalysisError::DegenerateGrid {
            reason: "all angles coincide".into(),
        });
    }

    let nearest = |target: f64| {
        thetas
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (*a - target).abs().partial_cmp(&(*b - target).abs()).unwrap()
            })
            .map(|(k, _)| k)
            .unwrap()
    };
    let mut p = [
        intensities[nearest(0.0)],
        intensities[nearest(PI / 2.0)] - intensities[nearest(0.0)],
        0.0,
        0.0,
    ];
    let mut d_frozen = p[1].abs() < D_FREEZE_RATIO * p[0].abs();

    let sse_of = |p: &[f64; 4]| -> f64 {
        thetas
            .iter()
            .zip(&intensities)
            .map(|(&t, &i)| (model_value(p, t) - i).powi(2))
            .sum()
    };

    let mut sse = sse_of(&p);
    let mut lambda = 1e-3;
    let mut hessian_final: Option<(DMatrix<f64>, Vec<usize>)> = None;
    for _ in 0..200 {
        let active: Vec<usize> = if d_frozen { vec![0, 1, 2] } else { vec![0, 1, 2, 3] };
        let k = active.len();
        let mut jtj = DMatrix::<f64>::zeros(k, k);
        let mut jtr = DVector::<f64>::zeros(k);
        for (&t, &i) in thetas.iter().zip(&intensities) {
            let g = model_gradient(&p, t);
            let r = model_value(&p, t) - i;
            for (row, &pi) in active.iter().enumerate() {
                jtr[row] += g[pi] * r;
                for (col, &pj) in active.iter().enumerate() {
                    jtj[(row, col)] += g[pi] * g[pj];
                }
            }
        }
        hessian_final = Some((jtj.clone(), active.clone()));

        // Inner damping loop: escalate λ until a downhill step appears.
        let mut step_norm = 0.0;
        let mut accepted = false;
        while lambda < 1e12 {
            let mut damped = jtj.clone();
            for i in 0..k {
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-12);
            }
            let delta = match damped.lu().solve(&(-&jtr)) {
                Some(d) => d,
                None => {
                    lambda *= 10.0;
                    continue;
                }
            };
            let mut trial = p;
            for (row, &pi) in active.iter().enumerate() {
                trial[pi] += delta[row];
            }
            let trial_sse = sse_of(&trial);
            if trial_sse.is_finite() && trial_sse <= sse {
                step_norm = delta.norm();
                p = trial;
                sse = trial_sse;
                lambda = (lambda * 0.3).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            return Err(AnalysisError::NonConvergence {
                reason: "damping exhausted without a downhill step".into(),
            });
        }
        if !d_frozen && p[1].abs() < D_FREEZE_RATIO * p[0].abs() {
            d_frozen = true;
            p[3] = 0.0;
        }
        let scale: f64 = p.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-30);
        if step_norm / scale < 1e-10 {
            break;
        }
    }

    if !p[0].is_finite() || p[0] <= 0.0 {
        return Err(AnalysisError::NonpositiveModel { theta: 0.0 });
    }

    // First-order parameter covariance from the final Gauss-Newton Hessian.
    let (jtj, active) = hessian_final.expect("at least one iteration ran");
    let dof = (n as f64 - active.len() as f64).max(1.0);
    let variance = sse / dof;
    let mut se = [0.0f64; 4];
    if let Some(inv) = jtj.try_inverse() {
        for (row, &pi) in active.iter().enumerate() {
            se[pi] = (variance * inv[(row, row)]).max(0.0).sqrt();
        }
    }

    Ok(EllipseFit {
        a: p[0],
        b: p[1],
        c: p[2],
        d: p[3],
        residual_rms: (sse / n as f64).sqrt(),
        se_a: se[0],
        se_b: se[1],
        se_c: se[2],
        se_d: se[3],
    })
}

/// Major-to-minor axis ratio of the fitted intensity ellipse,
/// `ε = √(I(0)/I(π/2))` evaluated on the fitted model.
pub fn ellipticity(fit: &EllipseFit) -> Result<f64, AnalysisError> {
    let i0 = fit.model(0.0);
    let i90 = fit.model(PI / 2.0);
    if i0 <= 0.0 {
        return Err(AnalysisError::NonpositiveModel { theta: 0.0 });
    }
    if i90 <= 0.0 {
        return Err(AnalysisError::NonpositiveModel { theta: PI / 2.0 });
    }
    Ok((i0 / i90).sqrt())
}

/// Worst-case overlap fidelity implied by an ellipticity:
/// `F = (1 + 1/ε)/2`.
pub fn fidelity_from_ellipticity(eps: f64) -> f64 {
    debug_assert!(eps > 0.0, "ellipticity must be positive");
    (1.0 + 1.0 / eps) / 2.0
}

/// Minimum input-output overlap over the preparation grid:
/// `F_δ = min_θ (1 + r̂_in·r⃗_out / normalization)/2` with
/// `r̂_in = (sinθ, 0, cosθ)`.
///
/// `normalization` is the output amplitude at θ = 0 (absolute for control
/// data; the conditional amplitude for accepted coded data). The grid must
/// contain the θ = 0 reference point.
pub fn overlap_fidelity(
    outputs: &[(f64, f64, f64)],
    normalization: f64,
) -> Result<f64, AnalysisError> {
    if normalization <= 0.0 {
        return Err(AnalysisError::MissingReference {
            reason: format!("normalization amplitude {normalization} must be positive"),
        });
    }
    if !outputs.iter().any(|&(t, _, _)| t.abs() < 1e-9) {
        return Err(AnalysisError::MissingReference {
            reason: "no θ = 0 point in the output grid".into(),
        });
    }
    let overlap = outputs
        .iter()
        .map(|&(theta, z, x)| {
            let dot = theta.sin() * x + theta.cos() * z;
            (1.0 + dot / normalization) / 2.0
        })
        .fold(f64::INFINITY, f64::min);
    Ok(overlap)
}

/// Weighted quadratic fit `y = c0 + c1·t + c2·t²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    /// Coefficients `(c0, c1, c2)`.
    pub c: [f64; 3],
    /// Standard errors of the coefficients.
    pub se: [f64; 3],
    /// Root-mean-square residual (unweighted).
    pub residual_rms: f64,
}

/// Weighted linear least squares in the monomial basis `{1, t, t²}`.
///
/// `weights`, when given, multiply the squared residuals; omitted weights
/// are uniform. Standard errors come from the scaled covariance
/// `σ̂²(XᵀWX)⁻¹` with `σ̂² = Σw·r²/(n−3)`.
pub fn quadratic_fit(
    series: &[(f64, f64)],
    weights: Option<&[f64]>,
) -> Result<QuadraticFit, AnalysisError> {
    let n = series.len();
    if n < 4 {
        return Err(AnalysisError::DegenerateGrid {
            reason: format!("need at least 4 points, got {n}"),
        });
    }
    if let Some(w) = weights {
        if w.len() != n {
            return Err(AnalysisError::DegenerateGrid {
                reason: "weight count does not match point count".into(),
            });
        }
        if w.iter().any(|&v| !(v > 0.0)) {
            return Err(AnalysisError::DegenerateGrid {
                reason: "weights must be positive".into(),
            });
        }
    }
    let w_of = |k: usize| weights.map_or(1.0, |w| w[k]);
    let mut xtwx = DMatrix::<f64>::zeros(3, 3);
    let mut xtwy = DVector::<f64>::zeros(3);
    for (k, &(t, y)) in series.iter().enumerate() {
        let row = [1.0, t, t * t];
        let w = w_of(k);
        for i in 0..3 {
            xtwy[i] += w * row[i] * y;
            for j in 0..3 {
                xtwx[(i, j)] += w * row[i] * row[j];
            }
        }
    }
    let inv = xtwx.try_inverse().ok_or(AnalysisError::RankDeficient)?;
    let coeffs = &inv * xtwy;
    let mut wsse = 0.0;
    let mut sse = 0.0;
    for (k, &(t, y)) in series.iter().enumerate() {
        let r = coeffs[0] + coeffs[1] * t + coeffs[2] * t * t - y;
        wsse += w_of(k) * r * r;
        sse += r * r;
    }
    let variance = wsse / (n as f64 - 3.0);
    Ok(QuadraticFit {
        c: [coeffs[0], coeffs[1], coeffs[2]],
        se: [
            (variance * inv[(0, 0)]).max(0.0).sqrt(),
            (variance * inv[(1, 1)]).max(0.0).sqrt(),
            (variance * inv[(2, 2)]).max(0.0).sqrt(),
        ],
        residual_rms: (sse / n as f64).sqrt(),
    })
}

/// Resource-accounting model comparing error detection (two-spin code)
/// against full correction (three-spin code).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TradeoffModel {
    /// Fixed molecule pool split into code blocks: signal per molecule
    /// `(1−2p)/2` for detection vs `1/3` for correction.
    Pool,
    /// Imperfect gates with per-gate error `p_g`: figures of merit
    /// `(1−2p)(1−p_g)` vs `(1−3p_g)`.
    GateCost,
    /// Two-qubit memory: signal `(1−2p)/4` vs `1/8`.
    Signal2m,
}

impl std::fmt::Display for TradeoffModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TradeoffModel::Pool => "pool",
            TradeoffModel::GateCost => "gate_cost",
            TradeoffModel::Signal2m => "signal_2m",
        })
    }
}

/// Both schemes' resource figures at one error probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TradeoffReport {
    pub model: TradeoffModel,
    pub p: f64,
    /// Aggregate accepted signal per molecule for the detection scheme.
    pub detection_signal: f64,
    /// Aggregate signal per molecule for the correction scheme.
    pub correction_signal: f64,
    pub detection_fidelity: f64,
    pub correction_fidelity: f64,
    /// Error probability at which the two schemes' figures of merit cross.
    pub crossover_p: f64,
}

impl TradeoffReport {
    /// The detection scheme's figure of merit for this model.
    pub fn detection_figure(&self) -> f64 {
        match self.model {
            TradeoffModel::Pool | TradeoffModel::Signal2m => self.detection_signal,
            TradeoffModel::GateCost => self.detection_signal * self.detection_fidelity,
        }
    }

    /// The correction scheme's figure of merit for this model.
    pub fn correction_figure(&self) -> f64 {
        match self.model {
            TradeoffModel::Pool | TradeoffModel::Signal2m => self.correction_signal,
            TradeoffModel::GateCost => self.correction_signal * self.correction_fidelity,
        }
    }
}

/// Evaluate one tradeoff model at storage-error probability `p` (per spin
/// per interval) and gate-error probability `p_g`.
///
/// For the pool and two-qubit-memory models the figure of merit is the
/// aggregate signal (the schemes' state fidelities agree to O(p²) there);
/// for the gate-cost model it is signal × gate-fidelity.
pub fn tradeoff(p: f64, p_g: f64, model: TradeoffModel) -> TradeoffReport {
    debug_assert!((0.0..=0.5).contains(&p), "p must lie in [0, 1/2]");
    debug_assert!((0.0..=0.5).contains(&p_g), "p_g must lie in [0, 1/2]");
    match model {
        TradeoffModel::Pool => TradeoffReport {
            model,
            p,
            detection_signal: (1.0 - 2.0 * p) / 2.0,
            correction_signal: 1.0 / 3.0,
            detection_fidelity: 1.0 - p * p,
            correction_fidelity: 1.0 - 3.0 * p * p,
            crossover_p: 1.0 / 6.0,
        },
        TradeoffModel::GateCost => TradeoffReport {
            model,
            p,
            detection_signal: 1.0 - 2.0 * p,
            correction_signal: 1.0,
            detection_fidelity: 1.0 - p_g,
            correction_fidelity: 1.0 - 3.0 * p_g,
            crossover_p: p_g / (1.0 - p_g),
        },
        TradeoffModel::Signal2m => TradeoffReport {
            model,
            p,
            detection_signal: (1.0 - 2.0 * p) / 4.0,
            correction_signal: 1.0 / 8.0,
            detection_fidelity: 1.0 - p * p,
            correction_fidelity: 1.0 - 3.0 * p * p,
            crossover_p: 1.0 / 4.0,
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn theta_grid() -> Vec<f64> {
        (0..=10).map(|k| k as f64 * PI / 10.0).collect()
    }

    /// Ideal control outputs: z = cosθ, x = (1−2p)·sinθ.
    fn control_points(p: f64) -> Vec<(f64, f64, f64)> {
        theta_grid()
            .into_iter()
            .map(|t| (t, t.cos(), (1.0 - 2.0 * p) * t.sin()))
            .collect()
    }

    /// Ideal accepted coded outputs per the closed forms.
    fn coded_points(p_a: f64, p_b: f64) -> Vec<(f64, f64, f64)> {
        let zc = 1.0 - p_a - p_b + 2.0 * p_a * p_b;
        let xc = 1.0 - p_a - p_b;
        theta_grid()
            .into_iter()
            .map(|t| (t, zc * t.cos(), xc * t.sin()))
            .collect()
    }

    #[test]
    fn fit_recovers_ideal_control_parameters() {
        let fit = fit_ellipse(&control_points(0.1)).unwrap();
        assert_abs_diff_eq!(fit.a, 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(fit.b, -0.36, epsilon = 1e-8);
        assert_abs_diff_eq!(fit.c, 0.0, epsilon = 1e-8);
        assert_abs_diff_eq!(fit.d, 0.0, epsilon = 1e-8);
        assert!(fit.residual_rms < 1e-9);
    }

    #[test]
    fn fit_on_constant_intensity_freezes_the_offset() {
        let points: Vec<(f64, f64, f64)> = theta_grid()
            .into_iter()
            .map(|t| (t, 0.8 * t.cos(), 0.8 * t.sin()))
            .collect();
        let fit = fit_ellipse(&points).unwrap();
        assert_abs_diff_eq!(fit.a, 0.64, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.b, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.c, 0.0, epsilon = 1e-9);
        assert_eq!(fit.d, 0.0, "offset must stay frozen");
        assert_eq!(fit.se_d, 0.0);
    }

    #[test]
    fn fit_recovers_injected_droop_and_offset() {
        // Generate from the full model with C and D active, add small
        // reproducible noise, and require recovery within 2 standard
        // errors.
        let (a0, b0, c0, d0) = (1.0, -0.36, 0.04, 0.05);
        let truth = EllipseFit {
            a: a0,
            b: b0,
            c: c0,
            d: d0,
            residual_rms: 0.0,
            se_a: 0.0,
            se_b: 0.0,
            se_c: 0.0,
            se_d: 0.0,
        };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(12345);
        let points: Vec<(f64, f64, f64)> = theta_grid()
            .into_iter()
            .map(|t| {
                let i = truth.model(t).max(1e-12);
                let r = i.sqrt();
                let dz: f64 = rng.gen_range(-0.002..0.002);
                let dx: f64 = rng.gen_range(-0.002..0.002);
                (t, r * t.cos() + dz, r * t.sin() + dx)
            })
            .collect();
        let fit = fit_ellipse(&points).unwrap();
        for (got, want, se) in [
            (fit.a, a0, fit.se_a),
            (fit.b, b0, fit.se_b),
            (fit.c, c0, fit.se_c),
            (fit.d, d0, fit.se_d),
        ] {
            assert!(
                (got - want).abs() <= 2.0 * se.max(1e-6),
                "parameter {got} vs {want} (se {se})"
            );
        }
        assert!((fit.c - c0).abs() < 0.05 && (fit.d - d0).abs() < 0.05);
    }

    #[test]
    fn fit_rejects_degenerate_inputs() {
        assert!(fit_ellipse(&[(0.0, 1.0, 0.0); 4]).is_err());
        assert!(fit_ellipse(&[(0.3, 1.0, 0.0); 7]).is_err());
    }

    #[test]
    fn control_ellipticity_follows_the_exponential_law() {
        for t_d in [0.0f64, 0.0615, 0.123, 0.1845, 0.246, 0.3075] {
            let t2s = 0.4f64;
            let p = (1.0 - (-t_d / t2s).exp()) / 2.0;
            let fit = fit_ellipse(&control_points(p)).unwrap();
            let eps = ellipticity(&fit).unwrap();
            assert_abs_diff_eq!(eps, (t_d / t2s).exp(), epsilon = 1e-9);
        }
    }

    #[test]
    fn coded_ellipticity_matches_the_conditional_axis_ratio() {
        let (p_a, p_b) = (0.1, 0.1);
        let fit = fit_ellipse(&coded_points(p_a, p_b)).unwrap();
        let eps = ellipticity(&fit).unwrap();
        let want = (1.0 - p_a - p_b + 2.0 * p_a * p_b) / (1.0 - p_a - p_b);
        assert_abs_diff_eq!(eps, want, epsilon = 1e-9);
        assert_abs_diff_eq!(eps, 0.82 / 0.80, epsilon = 1e-9);
    }

    #[test]
    fn fidelity_examples() {
        assert_abs_diff_eq!(fidelity_from_ellipticity(1.0), 1.0, epsilon = 1e-15);
        let f = fidelity_from_ellipticity(1.025);
        assert!((f - 0.9878).abs() < 1e-4);
        assert!((1.0 - f - 0.0122).abs() < 1e-4);
        // ε = e^{λt} gives the unencoded equatorial fidelity (1+e^{−λt})/2.
        let lt: f64 = 0.3;
        assert_abs_diff_eq!(
            fidelity_from_ellipticity(lt.exp()),
            (1.0 + (-lt).exp()) / 2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn overlap_fidelity_of_ideal_control_is_one_minus_p() {
        for p in [0.0, 0.05, 0.2, 0.269] {
            let f = overlap_fidelity(&control_points(p), 1.0).unwrap();
            assert_abs_diff_eq!(f, 1.0 - p, epsilon = 1e-12);
        }
    }

    #[test]
    fn overlap_fidelity_of_coded_data_with_conditional_normalization() {
        let (p_a, p_b) = (0.02, 0.02);
        let norm = 1.0 - p_a - p_b + 2.0 * p_a * p_b;
        let f = overlap_fidelity(&coded_points(p_a, p_b), norm).unwrap();
        // Exact closed form: minimum at θ = π/2.
        let want = (1.0 + (1.0 - p_a - p_b) / norm) / 2.0;
        assert_abs_diff_eq!(f, want, epsilon = 1e-12);
        // Second-order suppression at small p: F ≈ 1 − p_a·p_b.
        assert!((f - (1.0 - p_a * p_b)).abs() < 5e-5);
    }

    #[test]
    fn overlap_fidelity_validates_inputs() {
        let no_reference = vec![(0.3, 1.0, 0.0), (0.6, 0.8, 0.1)];
        assert!(overlap_fidelity(&no_reference, 1.0).is_err());
        assert!(overlap_fidelity(&control_points(0.1), 0.0).is_err());
    }

    #[test]
    fn overlap_fidelity_never_exceeds_one_and_is_tight_for_perfect_data() {
        let f = overlap_fidelity(&control_points(0.0), 1.0).unwrap();
        assert_abs_diff_eq!(f, 1.0, epsilon = 1e-12);
        for p in [0.01, 0.1, 0.3] {
            assert!(overlap_fidelity(&control_points(p), 1.0).unwrap() < 1.0);
        }
    }

    #[test]
    fn quadratic_fit_is_exact_on_a_parabola() {
        let series: Vec<(f64, f64)> = (0..6)
            .map(|k| {
                let t = k as f64 * 0.0615;
                (t, 1.0 + 0.15 * t + 2.5 * t * t)
            })
            .collect();
        let fit = quadratic_fit(&series, None).unwrap();
        assert_abs_diff_eq!(fit.c[0], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(fit.c[1], 0.15, epsilon = 1e-9);
        assert_abs_diff_eq!(fit.c[2], 2.5, epsilon = 1e-8);
        assert!(fit.residual_rms < 1e-10);
    }

    #[test]
    fn quadratic_fit_of_control_exponential_has_plausible_linear_term() {
        // e^{t/0.4} over the six default storage times: the least-squares
        // linear coefficient lands between the Taylor value 2.5 and 3.
        let series: Vec<(f64, f64)> = (0..6)
            .map(|k| {
                let t = k as f64 * 0.0615;
                (t, (t / 0.4).exp())
            })
            .collect();
        let fit = quadratic_fit(&series, None).unwrap();
        assert_abs_diff_eq!(fit.c[0], 1.0, epsilon = 0.01);
        assert!(
            fit.c[1] >= 2.0 && fit.c[1] <= 3.0,
            "linear term {} outside [2, 3]",
            fit.c[1]
        );
    }

    #[test]
    fn quadratic_fit_weight_scaling_leaves_coefficients_unchanged() {
        let series: Vec<(f64, f64)> = (0..8)
            .map(|k| {
                let t = k as f64 * 0.05;
                (t, 0.4 - 0.2 * t + 1.7 * t * t + if k % 2 == 0 { 1e-3 } else { -1e-3 })
            })
            .collect();
        let uniform = quadratic_fit(&series, None).unwrap();
        let scaled = quadratic_fit(&series, Some(&vec![7.5; 8])).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(uniform.c[i], scaled.c[i], epsilon = 1e-10);
            assert_abs_diff_eq!(uniform.se[i], scaled.se[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn quadratic_fit_rejects_bad_inputs() {
        let three: Vec<(f64, f64)> = (0..3).map(|k| (k as f64, 1.0)).collect();
        assert!(quadratic_fit(&three, None).is_err());
        let degenerate = vec![(1.0, 2.0); 6];
        assert!(quadratic_fit(&degenerate, None).is_err());
        let series: Vec<(f64, f64)> = (0..5).map(|k| (k as f64, 1.0)).collect();
        assert!(quadratic_fit(&series, Some(&[1.0, 1.0, 0.0, 1.0, 1.0])).is_err());
    }

    #[test]
    fn pool_crossover_equalizes_the_signals() {
        let report = tradeoff(1.0 / 6.0, 0.0, TradeoffModel::Pool);
        assert_abs_diff_eq!(
            report.detection_figure(),
            report.correction_figure(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(report.crossover_p, 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn two_qubit_memory_signal_ratio_at_zero_error() {
        let report = tradeoff(0.0, 0.0, TradeoffModel::Signal2m);
        assert_abs_diff_eq!(report.detection_signal, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(report.correction_signal, 0.125, epsilon = 1e-15);
        assert_abs_diff_eq!(report.crossover_p, 0.25, epsilon = 1e-15);
        let at_crossover = tradeoff(0.25, 0.0, TradeoffModel::Signal2m);
        assert_abs_diff_eq!(
            at_crossover.detection_figure(),
            at_crossover.correction_figure(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn gate_cost_crossover_formula() {
        for p_g in [0.0f64, 0.01, 0.1, 0.2] {
            let crossover: f64 = p_g / (1.0 - p_g);
            let report = tradeoff(crossover.min(0.5), p_g, TradeoffModel::GateCost);
            assert_abs_diff_eq!(report.crossover_p, crossover, epsilon = 1e-12);
            if crossover <= 0.5 {
                assert_abs_diff_eq!(
                    report.detection_figure(),
                    report.correction_figure(),
                    epsilon = 1e-12
                );
            }
        }
        assert_eq!(tradeoff(0.1, 0.0, TradeoffModel::GateCost).crossover_p, 0.0);
    }

    proptest! {
        /// The fitted model reproduces noiseless model data to 1e−8 in all
        /// parameters across a range of ellipse shapes.
        #[test]
        fn fit_round_trips_noiseless_model_data(
            minor in 0.3f64..1.0,
            droop in 0.0f64..0.08,
        ) {
            let truth = EllipseFit {
                a: 1.0, b: minor * minor - 1.0, c: droop, d: 0.02,
                residual_rms: 0.0, se_a: 0.0, se_b: 0.0, se_c: 0.0, se_d: 0.0,
            };
            let points: Vec<(f64, f64, f64)> = theta_grid()
                .into_iter()
                .map(|t| {
                    let i = truth.model(t);
                    prop_assume!(i > 1e-6);
                    Ok((t, i.sqrt() * t.cos(), i.sqrt() * t.sin()))
                })
                .collect::<Result<_, TestCaseError>>()?;
            let fit = fit_ellipse(&points).unwrap();
            prop_assert!((fit.a - truth.a).abs() < 1e-7);
            prop_assert!((fit.b - truth.b).abs() < 1e-7);
            prop_assert!((fit.c - truth.c).abs() < 1e-7);
            prop_assert!((fit.d - truth.d).abs() < 1e-6);
        }

        /// Overlap fidelity is bounded above by 1 for contractive outputs.
        #[test]
        fn overlap_fidelity_bounded(p in 0.0f64..0.5) {
            let f = overlap_fidelity(&control_points(p), 1.0).unwrap();
            prop_assert!(f <= 1.0 + 1e-12);
        }
    }
}
