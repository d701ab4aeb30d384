//! Dense simulation of small parameterized circuits.
//!
//! Gates come from the fixed set {H, Rz, Ry, CNOT}. Pure states are
//! simulated as amplitude vectors, noisy runs as density matrices. Qubit 0 is
//! the least-significant bit of the basis index, so `|q1 q0⟩ = |01⟩` is index 1.

mod circuit;
mod gradient;
mod noise;
mod state;

pub use circuit::{Angle, Circuit, Gate};
pub use gradient::{parameter_shift_grad, parameter_shift_jacobian};
pub use noise::{NoiseChannel, NoiseModel};
pub use state::{
    apply_gate, estimate_expectations, expectation_z, run_circuit, sample_shots, sample_shots_with, QuantumState,
    Readout, StateMode,
};

use thiserror::Error;

/// Largest register simulated as a statevector.
pub const MAX_PURE_QUBITS: usize = 12;
/// Largest register simulated as a density matrix.
pub const MAX_MIXED_QUBITS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("qubit index {index} out of range for {qubits} qubits")]
    QubitOutOfRange { index: usize, qubits: usize },
    #[error("CNOT control and target are both qubit {0}")]
    SameControlTarget(usize),
    #[error("{qubits} qubits exceeds the {mode:?} simulation cap of {cap}")]
    TooManyQubits { qubits: usize, mode: StateMode, cap: usize },
    #[error("parameter {0} is not bound")]
    UnboundParameter(usize),
    #[error("noise channels require a mixed (density-matrix) state")]
    NeedsMixedState,
    #[error("invalid noise model: {0}")]
    InvalidNoise(String),
    #[error("shot count must be at least 1")]
    ZeroShots,
    #[error("circuit has {got} qubits, expected {expected}")]
    QubitMismatch { expected: usize, got: usize },
}
