//! Deterministic simulator and analysis toolkit for a two-spin NMR
//! error-detection experiment.
//!
//! The crate models a heteronuclear two-spin system (spin `A` carries the
//! data qubit, spin `B` the ancilla) through the full life of a
//! phase-damping detection-code run: thermal-state preparation with temporal
//! labeling, pulse-sequence compilation, encoded or plain storage under
//! phase damping with refocusing, decoding, spectral readout, and the
//! downstream curve fitting that turns readout ellipses into error
//! probabilities and fidelities.
//!
//! Modules:
//!
//! - [`qcore`] — exact complex linear algebra for one- and two-spin states:
//!   Pauli decomposition, Bloch vectors, tensor products, unitary
//!   conjugation, ancilla projection.
//! - [`gates`] — pulse and delay primitives, a named gate library, and
//!   sequence-to-unitary compilation with RF-angle scaling hooks.
//! - [`channels`] — noise processes: independent two-spin phase damping,
//!   phenomenological amplitude relaxation, and the Lorentzian
//!   RF-field-inhomogeneity ensemble with calibration and quadrature
//!   averaging.
//! - [`experiment`] — end-to-end orchestration: labeled initial state,
//!   input preparation, coded/control storage, readout and peak integrals,
//!   spectrum synthesis, and tomography.
//! - [`analysis`] — ellipse fits, ellipticities, fidelities, quadratic
//!   trend fits, and detection-vs-correction tradeoff metrics.
//!
//! All computation is pure and deterministic; every public function is safe
//! for unrestricted parallel use.

pub mod analysis;
pub mod channels;
pub mod experiment;
pub mod gates;
pub mod qcore;
