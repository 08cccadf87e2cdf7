//! Exact complex linear algebra for one- and two-spin states.
//!
//! States are *deviation* density matrices: the traceless part of a thermal
//! density matrix, carrying all observable signal. They are Hermitian but
//! not normalized to unit trace, and need not be positive. The two-spin
//! basis is ordered `|00⟩, |01⟩, |10⟩, |11⟩` with spin `A` as the left
//! (slow-index) factor.
//!
//! Two tolerances are used throughout: [`EXACT_TOL`] (`1e-12`) for algebra
//! that should hold to machine precision, and [`VALIDATE_TOL`] (`1e-9`) for
//! input validation.

use nalgebra::SMatrix;
use num_complex::Complex;
use thiserror::Error;

/// Double-precision complex scalar.
pub type C64 = Complex<f64>;
/// Dense 2×2 complex matrix: single-spin operators and reduced states.
pub type Matrix2c = SMatrix<C64, 2, 2>;
/// Dense 4×4 complex matrix: two-spin unitaries and deviation states.
pub type Matrix4c = SMatrix<C64, 4, 4>;

/// Tolerance for identities expected to hold to machine precision.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance for validating caller-supplied matrices.
pub const VALIDATE_TOL: f64 = 1e-9;

/// Errors raised by input validation in this module.
#[derive(Debug, Error)]
pub enum QcoreError {
    /// The input was expected to be Hermitian; `defect` is the max-abs
    /// entry of its anti-Hermitian part.
    #[error("matrix is not Hermitian (anti-Hermitian defect {defect:.3e})")]
    NotHermitian { defect: f64 },
    /// The input was expected to be unitary; `defect` is the max-abs entry
    /// of `U·U† − I`.
    #[error("matrix is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// 2×2 identity.
pub fn id2() -> Matrix2c {
    Matrix2c::identity()
}

/// 4×4 identity.
pub fn id4() -> Matrix4c {
    Matrix4c::identity()
}

/// Pauli σ_x.
pub fn sigma_x() -> Matrix2c {
    Matrix2c::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
}

/// Pauli σ_y.
pub fn sigma_y() -> Matrix2c {
    Matrix2c::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0))
}

/// Pauli σ_z.
pub fn sigma_z() -> Matrix2c {
    Matrix2c::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))
}

/// The Pauli basis element σ_i for `i ∈ {0=I, 1=x, 2=y, 3=z}`.
pub fn pauli(i: usize) -> Matrix2c {
    match i {
        0 => id2(),
        1 => sigma_x(),
        2 => sigma_y(),
        3 => sigma_z(),
        _ => panic!("Pauli index must be 0..=3, got {i}"),
    }
}

/// Kronecker product `a ⊗ b` with spin `A` as the left factor.
pub fn tensor(a: &Matrix2c, b: &Matrix2c) -> Matrix4c {
    let mut out = Matrix4c::zeros();
    for ia in 0..2 {
        for ja in 0..2 {
            for ib in 0..2 {
                for jb in 0..2 {
                    out[(2 * ia + ib, 2 * ja + jb)] = a[(ia, ja)] * b[(ib, jb)];
                }
            }
        }
    }
    out
}

/// The two-spin Pauli basis element σ_i ⊗ σ_j.
pub fn pauli2(i: usize, j: usize) -> Matrix4c {
    tensor(&pauli(i), &pauli(j))
}

/// Max-abs entry of the anti-Hermitian part of `m`.
pub fn hermitian_defect4(m: &Matrix4c) -> f64 {
    let d = m - m.adjoint();
    d.iter().map(|z| z.norm()).fold(0.0, f64::max) / 2.0
}

/// Max-abs entry of the anti-Hermitian part of `m`.
pub fn hermitian_defect2(m: &Matrix2c) -> f64 {
    let d = m - m.adjoint();
    d.iter().map(|z| z.norm()).fold(0.0, f64::max) / 2.0
}

/// Max-abs entry of `U·U† − I`; zero for unitary `U`.
pub fn unitary_defect(u: &Matrix4c) -> f64 {
    let d = u * u.adjoint() - id4();
    d.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Max-abs entrywise difference between two matrices.
pub fn max_abs_diff(a: &Matrix4c, b: &Matrix4c) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// The 16 real coefficients `c_ij` of a two-spin Pauli decomposition
/// `m = Σ_ij c_ij σ_i ⊗ σ_j`, indexed `(i, j)` with
/// `i, j ∈ {0=I, 1=x, 2=y, 3=z}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliCoeffs {
    /// Row index `i` refers to spin `A`, column index `j` to spin `B`.
    pub c: [[f64; 4]; 4],
}

impl PauliCoeffs {
    /// All-zero coefficients.
    pub fn zeros() -> Self {
        PauliCoeffs { c: [[0.0; 4]; 4] }
    }

    /// Coefficient `c_ij`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.c[i][j]
    }

    /// In-place `self += w · other`; used by quadrature averaging.
    pub fn add_scaled(&mut self, other: &PauliCoeffs, w: f64) {
        for i in 0..4 {
            for j in 0..4 {
                self.c[i][j] += w * other.c[i][j];
            }
        }
    }

    /// Rebuild the matrix `Σ_ij c_ij σ_i ⊗ σ_j`.
    pub fn reconstruct(&self) -> Matrix4c {
        let mut out = Matrix4c::zeros();
        for i in 0..4 {
            for j in 0..4 {
                if self.c[i][j] != 0.0 {
                    out += pauli2(i, j).scale(self.c[i][j]);
                }
            }
        }
        out
    }

    /// Largest absolute coefficient difference to `other`.
    pub fn max_abs_diff(&self, other: &PauliCoeffs) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                d = d.max((self.c[i][j] - other.c[i][j]).abs());
            }
        }
        d
    }
}

/// Decompose a Hermitian two-spin matrix into Pauli coefficients
/// `c_ij = Re tr(m · σ_i⊗σ_j) / 4`.
///
/// Rejects inputs whose anti-Hermitian defect exceeds [`VALIDATE_TOL`];
/// for Hermitian inputs every trace is real and
/// `pauli_reconstruct(pauli_decompose(m)) == m` to [`EXACT_TOL`].
pub fn pauli_decompose(m: &Matrix4c) -> Result<PauliCoeffs, QcoreError> {
    let defect = hermitian_defect4(m);
    if defect > VALIDATE_TOL {
        return Err(QcoreError::NotHermitian { defect });
    }
    Ok(pauli_decompose_unchecked(m))
}

/// [`pauli_decompose`] without the Hermiticity check, for internal use on
/// states known to be Hermitian by construction.
pub fn pauli_decompose_unchecked(m: &Matrix4c) -> PauliCoeffs {
    let mut out = PauliCoeffs::zeros();
    for i in 0..4 {
        for j in 0..4 {
            out.c[i][j] = (m * pauli2(i, j)).trace().re / 4.0;
        }
    }
    out
}

/// Unitary conjugation `U ρ U†`.
///
/// Validates that `u` is unitary to [`VALIDATE_TOL`]; preserves Hermiticity
/// and trace of `rho`.
pub fn conjugate(u: &Matrix4c, rho: &Matrix4c) -> Result<Matrix4c, QcoreError> {
    let defect = unitary_defect(u);
    if defect > VALIDATE_TOL {
        return Err(QcoreError::NotUnitary { defect });
    }
    Ok(u * rho * u.adjoint())
}

/// Ancilla measurement outcome: spin `B` found in `|0⟩` or `|1⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AncillaBit {
    /// `B = |0⟩` — the syndrome accepts the state.
    Zero,
    /// `B = |1⟩` — the syndrome flags an error.
    One,
}

/// The 2×2 spin-`A` sub-block of `rho` conditioned on spin `B` being in
/// `|outcome⟩`: `⟨outcome|_B ρ |outcome⟩_B`.
///
/// The two outcome blocks sum to the partial trace over `B`.
pub fn project_ancilla(rho: &Matrix4c, outcome: AncillaBit) -> Matrix2c {
    let o = match outcome {
        AncillaBit::Zero => 0,
        AncillaBit::One => 1,
    };
    Matrix2c::new(
        rho[(o, o)],
        rho[(o, 2 + o)],
        rho[(2 + o, o)],
        rho[(2 + o, 2 + o)],
    )
}

/// Partial trace over spin `B`, leaving the reduced state of spin `A`.
pub fn partial_trace_b(rho: &Matrix4c) -> Matrix2c {
    project_ancilla(rho, AncillaBit::Zero) + project_ancilla(rho, AncillaBit::One)
}

/// A real 3-vector of single-spin Pauli expectation values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl BlochVector {
    /// Euclidean length.
    pub fn magnitude(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }
}

/// Bloch components `(tr ρσ_x, tr ρσ_y, tr ρσ_z)` of a single-spin state.
///
/// No 1/2 normalization is applied, matching the deviation-matrix
/// convention: `bloch_of(σ_x) = (2, 0, 0)`.
pub fn bloch_of(rho: &Matrix2c) -> BlochVector {
    BlochVector {
        x: (rho * sigma_x()).trace().re,
        y: (rho * sigma_y()).trace().re,
        z: (rho * sigma_z()).trace().re,
    }
}
