//! Power-flow surrogates: a Newton-Raphson reference solver, a small
//! quantum-circuit simulator, and classical, quantum and hybrid regression
//! models trained to predict bus voltages from bus loads.

pub mod datagen;
pub mod experiments;
pub mod gridmodel;
pub mod neural;
pub mod qsim;
pub mod surrogates;

pub use datagen::{LabeledDataset, Record, SamplePool, Split};
pub use experiments::{run_experiment, ExperimentConfig, ExperimentId, ExperimentResult, RunRecord};
pub use gridmodel::{GridCase, NewtonOptions, PowerFlowSolution};
pub use neural::{MlpSpec, TrainConfig};
pub use qsim::{Circuit, Gate, NoiseModel, QuantumState, Readout};
pub use surrogates::{ModelKind, QcnnSpec, QnnSpec, Surrogate, TrainReport};
