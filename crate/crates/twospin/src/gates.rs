//! Pulse and delay primitives, a named gate library, and
//! sequence-to-unitary compilation.
//!
//! A [`PulseSequence`] is an ordered list of RF rotations and scalar-coupling
//! delays; [`compile`] turns it into a 4×4 unitary, with the *leftmost*
//! element acting first. Rotations follow `e^{−i(θ/2) σ·η̂}`.
//!
//! RF imperfections enter through per-spin angle [`Scales`]: an x- or
//! y-rotation of nominal angle θ on spin `s` is executed as `scale_s · θ`.
//! z-rotations are exempt — they are reference-frame shifts implemented in
//! the receiver bookkeeping, not physical pulses — and delays are likewise
//! unscaled.

use crate::qcore::{id2, pauli, tensor, Matrix2c, Matrix4c, C64};
use serde::{Deserialize, Serialize};

/// Which spin an element addresses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spin {
    A,
    B,
}

/// Rotation axis; the `Neg*` axes rotate about the reversed direction, so
/// `NegX` by θ equals `X` by −θ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    #[serde(rename = "x")]
    X,
    #[serde(rename = "y")]
    Y,
    #[serde(rename = "z")]
    Z,
    #[serde(rename = "-x")]
    NegX,
    #[serde(rename = "-y")]
    NegY,
    #[serde(rename = "-z")]
    NegZ,
}

impl Axis {
    /// Base Pauli index (1 = x, 2 = y, 3 = z) and direction sign.
    fn pauli_and_sign(self) -> (usize, f64) {
        match self {
            Axis::X => (1, 1.0),
            Axis::Y => (2, 1.0),
            Axis::Z => (3, 1.0),
            Axis::NegX => (1, -1.0),
            Axis::NegY => (2, -1.0),
            Axis::NegZ => (3, -1.0),
        }
    }

    /// True for `Z`/`NegZ`: frame shifts, never RF-scaled.
    fn is_frame_shift(self) -> bool {
        matches!(self, Axis::Z | Axis::NegZ)
    }
}

/// One element of a pulse sequence: an RF rotation on one spin, or a free
/// scalar-coupling delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseElement {
    /// Rotation of `spin` about `axis` by `angle` radians (must be finite).
    Rotation { spin: Spin, axis: Axis, angle: f64 },
    /// Free evolution under the scalar coupling for `duration` seconds
    /// (must be ≥ 0).
    JDelay { duration: f64 },
}

/// A named, ordered pulse sequence. Compiling the empty sequence yields the
/// identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub name: String,
    pub elements: Vec<PulseElement>,
}

/// Per-spin RF angle scale factors; `(1, 1)` is a perfect field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scales {
    pub a: f64,
    pub b: f64,
}

impl Scales {
    /// Perfectly calibrated field: every pulse executes its nominal angle.
    pub const IDEAL: Scales = Scales { a: 1.0, b: 1.0 };

    fn for_spin(&self, spin: Spin) -> f64 {
        match spin {
            Spin::A => self.a,
            Spin::B => self.b,
        }
    }
}

impl Default for Scales {
    fn default() -> Self {
        Scales::IDEAL
    }
}

/// Single-spin rotation `e^{−i(θ_eff/2) σ·η̂}` as a 2×2 matrix, where
/// `θ_eff = scale·angle` for x/y axes and `angle` (unscaled) for z.
pub fn rotation_matrix2(axis: Axis, angle: f64, scale: f64) -> Matrix2c {
    debug_assert!(angle.is_finite(), "rotation angle must be finite");
    debug_assert!(scale > 0.0, "RF scale must be positive");
    let (idx, sign) = axis.pauli_and_sign();
    let eff = if axis.is_frame_shift() {
        sign * angle
    } else {
        sign * angle * scale
    };
    let half = eff / 2.0;
    id2().scale(half.cos()) - pauli(idx).scale(half.sin()) * C64::new(0.0, 1.0)
}

/// Two-spin embedding of [`rotation_matrix2`]: the rotation on `spin`,
/// identity on the other spin.
pub fn rotation_unitary(spin: Spin, axis: Axis, angle: f64, scale: f64) -> Matrix4c {
    let r = rotation_matrix2(axis, angle, scale);
    match spin {
        Spin::A => tensor(&r, &id2()),
        Spin::B => tensor(&id2(), &r),
    }
}

/// Scalar-coupling evolution `exp(−i·(πJt/2)·σ_z⊗σ_z)` for a delay of `t`
/// seconds at coupling `j_hz` (Hz).
///
/// A delay of `1/(2J)` — the interval written `τ` — gives
/// `Diag(e^{−iπ/4}, e^{iπ/4}, e^{iπ/4}, e^{−iπ/4})`.
pub fn j_coupling_unitary(t: f64, j_hz: f64) -> Matrix4c {
    debug_assert!(t >= 0.0, "delay duration must be nonnegative");
    let phi = std::f64::consts::PI * j_hz * t / 2.0;
    let down = C64::new(0.0, -phi).exp(); // states |00⟩, |11⟩: σ_z⊗σ_z = +1
    let up = C64::new(0.0, phi).exp(); //   states |01⟩, |10⟩: σ_z⊗σ_z = −1
    Matrix4c::from_diagonal(&nalgebra::SVector::from([down, up, up, down]))
}

/// The unitary of one sequence element under the given coupling and scales.
pub fn element_unitary(elem: &PulseElement, j_hz: f64, scales: Scales) -> Matrix4c {
    match *elem {
        PulseElement::Rotation { spin, axis, angle } => {
            rotation_unitary(spin, axis, angle, scales.for_spin(spin))
        }
        PulseElement::JDelay { duration } => j_coupling_unitary(duration, j_hz),
    }
}

/// Compile a sequence to its unitary: the ordered product of element
/// unitaries with the leftmost element acting first, i.e.
/// `U = U_n ⋯ U_2 U_1`.
pub fn compile(seq: &PulseSequence, j_hz: f64, scales: Scales) -> Matrix4c {
    let mut u = Matrix4c::identity();
    for elem in &seq.elements {
        u = element_unitary(elem, j_hz, scales) * u;
    }
    u
}

/// Named gates available from [`gate_library`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    /// π/2 pulse on `A` about x̂.
    XA,
    /// y-rotation on `A` by an arbitrary angle — the input-preparation pulse.
    YA { angle: f64 },
    /// π/2 pulse on `B` about x̂.
    XB,
    /// π/2 pulse on `B` about ŷ.
    YB,
    /// Controlled-NOT up to phases: flips `A` conditioned on `B`, built from
    /// two pulses around a `τ` delay.
    CnTilde,
    /// Encoder taking `(α|0⟩+β|1⟩)⊗|0⟩` onto the protected two-spin
    /// codewords.
    UEnc,
    /// Decoder, the adjoint of [`Gate::UEnc`].
    UDec,
    /// Cross-phase modulation `e^{iπ/4}·Diag(1,1,1,−1)`.
    Chi,
    /// Hadamard on `B` (up to a global phase), in two pulses.
    HadamardB,
    /// π pulse on `B` about ŷ — the refocusing pulse used during storage.
    RefocusB,
}

fn rot(spin: Spin, axis: Axis, angle: f64) -> PulseElement {
    PulseElement::Rotation { spin, axis, angle }
}

/// The defining pulse sequence of a named gate.
///
/// `j_hz` fixes the absolute duration of the `τ = 1/(2J)` delays contained
/// in the multi-pulse gates; compile with the same coupling to reproduce
/// the intended unitaries.
pub fn gate_library(gate: Gate, j_hz: f64) -> PulseSequence {
    use std::f64::consts::PI;
    let tau = PulseElement::JDelay {
        duration: 1.0 / (2.0 * j_hz),
    };
    let (name, elements) = match gate {
        Gate::XA => ("X_a".to_string(), vec![rot(Spin::A, Axis::X, PI / 2.0)]),
        Gate::YA { angle } => (format!("Y_a({angle:.6})"), vec![rot(Spin::A, Axis::Y, angle)]),
        Gate::XB => ("X_b".to_string(), vec![rot(Spin::B, Axis::X, PI / 2.0)]),
        Gate::YB => ("Y_b".to_string(), vec![rot(Spin::B, Axis::Y, PI / 2.0)]),
        Gate::CnTilde => (
            "CN_tilde".to_string(),
            vec![rot(Spin::A, Axis::Y, PI / 2.0), tau, rot(Spin::A, Axis::X, PI / 2.0)],
        ),
        Gate::UEnc => (
            "U_enc".to_string(),
            vec![
                rot(Spin::B, Axis::Y, -PI / 2.0),
                rot(Spin::A, Axis::Y, PI / 2.0),
                tau,
                rot(Spin::A, Axis::X, -PI / 2.0),
                rot(Spin::B, Axis::Y, PI),
                rot(Spin::A, Axis::Z, PI / 2.0),
            ],
        ),
        Gate::UDec => (
            "U_dec".to_string(),
            vec![
                rot(Spin::B, Axis::Y, -PI),
                rot(Spin::A, Axis::Y, -PI / 2.0),
                tau,
                rot(Spin::A, Axis::X, PI / 2.0),
                rot(Spin::B, Axis::Y, PI / 2.0),
                rot(Spin::A, Axis::Z, PI / 2.0),
            ],
        ),
        Gate::Chi => (
            "chi".to_string(),
            vec![
                tau,
                rot(Spin::A, Axis::Z, -PI / 2.0),
                rot(Spin::B, Axis::Z, -PI / 2.0),
            ],
        ),
        Gate::HadamardB => (
            "hadamard_b".to_string(),
            vec![rot(Spin::B, Axis::X, -PI), rot(Spin::B, Axis::Y, 3.0 * PI / 2.0)],
        ),
        Gate::RefocusB => ("refocus_b".to_string(), vec![rot(Spin::B, Axis::Y, PI)]),
    };
    PulseSequence { name, elements }
}

/// Compile a named gate with a perfect RF field.
pub fn compiled(gate: Gate, j_hz: f64) -> Matrix4c {
    compile(&gate_library(gate, j_hz), j_hz, Scales::IDEAL)
}

/// Phase-insensitive distance `1 − |tr(U†V)|/4`; zero iff `U = e^{iφ}V`
/// for unitaries.
pub fn phase_distance(u: &Matrix4c, v: &Matrix4c) -> f64 {
    1.0 - (u.adjoint() * v).trace().norm() / 4.0
}
