//! Discovery and use of symmetry-protected subspaces (SPS) in layered quantum
//! circuits built from k-local gates.
//!
//! The crate works in the computational Z basis throughout. Instead of
//! evolving amplitudes in the full 2^n Hilbert space, it binarizes each
//! k-local gate into a *string edit map* — the partition of local bit
//! patterns into classes that the gate can mix — and treats the collection of
//! maps as an implicit graph on basis states. Three things fall out of that
//! graph:
//!
//! - [`sps::enumerate_sps`] walks the connected component of an initial state
//!   with a breadth-first search, producing the full invariant subspace.
//! - [`pathfind::chi`] greedily descends toward the minimum integer-encoded
//!   state of a component, so two states can be tested for co-membership
//!   without enumerating the component at all.
//! - [`metrics::postselect`] uses either test to filter noisy measurement
//!   records, recovering signal from data where errors have broken the
//!   conserved structure.
//!
//! [`models`] builds three reference systems (Heisenberg-XXX chain, and the
//! `T6`/`F4` Goldilocks cellular automata), [`sim`] runs exact and
//! Pauli-noise statevector trajectories of their circuits, and [`oracle`]
//! provides dense brute-force cross-checks on small systems.
//!
//! With the default `parallel` feature, shot sampling and whole-space search
//! sweeps run on rayon; disabling it yields a dependency-light sequential
//! build with identical outputs.

pub mod basis;
pub mod editmap;
pub mod exec;
pub mod metrics;
pub mod models;
pub mod oracle;
pub mod pathfind;
pub mod sim;
pub mod sps;

pub use basis::{BasisState, LocalWindow};
pub use editmap::{EditMap, EditMapSet, LocalUnitary};
pub use models::{Circuit, Model, ModelKind};
pub use sps::Subspace;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("qubit count {0} exceeds the supported maximum of 64")]
    TooManyQubits(u32),
    #[error("basis state code {code:#x} out of range for {n} qubits")]
    CodeOutOfRange { code: u64, n: u8 },
    #[error("invalid ket string {text:?}: {reason}")]
    BadKet { text: String, reason: String },
    #[error("window {0:?} is invalid: {1}")]
    BadWindow(Vec<u8>, String),
    #[error("window index {index} out of range for {n} qubits")]
    WindowOutOfRange { index: u8, n: u8 },
    #[error("local pattern {pattern} out of range for a {k}-qubit window")]
    PatternOutOfRange { pattern: u32, k: usize },
    #[error("matrix is not unitary: max |U^H U - I| = {residual:.3e} (tolerance {tol:.3e})")]
    NotUnitary { residual: f64, tol: f64 },
    #[error("matrix dimension {dim} is not 2^k for window of {k} qubits")]
    BadDimension { dim: usize, k: usize },
    #[error("subspace exceeded cap of {cap} members")]
    SubspaceTooLarge { cap: usize },
    #[error("a {n}-qubit sweep over 2^n states is above the supported limit of {limit} qubits")]
    SweepTooLarge { n: u8, limit: u8 },
    #[error("mismatched qubit counts: {0} vs {1}")]
    QubitCountMismatch(u8, u8),
    #[error("dense oracle is capped at {cap} qubits, got {n}")]
    OracleTooLarge { n: u8, cap: u8 },
    #[error("{0}")]
    InvalidParameter(String),
    #[error("reference distributions coincide; fidelity denominator is degenerate")]
    DegenerateReference,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed record: {0}")]
    MalformedRecord(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
