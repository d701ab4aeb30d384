//! Quantum (QNN) and hybrid quantum-classical (QCNN) power-flow surrogates,
//! plus the shared training loop used by the classical baselines too.
//!
//! Inputs are standardized with training-split statistics, encoded as
//! `Rz(atan x)` after a Hadamard layer, and passed through a Ry–CNOT–Ry
//! ansatz. Qubit expectations are mapped affinely onto
//! `v ∈ [0.85, 1.15]` pu and `δ ∈ [−8, 8]` degrees.

mod model;
mod quantum;
mod train;

pub use model::{Architecture, ModelKind, QcnnSpec, Scaler, Surrogate};
pub use quantum::{
    ansatz_gates, encode_features, to_angle, to_voltage, CallCounts, Entangler, Executor, Jacobian, QnnSpec,
    QuantumLayer, DELTA_HALF_WIDTH, V_CENTER, V_HALF_WIDTH,
};
pub use train::{evaluate, format_metrics_log, train, write_metrics_log, EpochMetrics, QuantumSettings, TrainReport};

use thiserror::Error;

use crate::neural::NeuralError;
use crate::qsim::SimError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SurrogateError {
    #[error("expected width {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid model: {0}")]
    Spec(String),
    #[error("non-finite input: {0}")]
    NonFinite(String),
    #[error("{0} split is empty")]
    EmptySplit(&'static str),
    #[error("loss became non-finite at epoch {epoch}, step {step}")]
    Diverged { epoch: usize, step: u64 },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error("i/o: {0}")]
    Io(String),
}
