//! Feed-forward regression network with rectifier hidden layers, trained by
//! backpropagation and Adam with decoupled weight decay.

mod adam;
mod checkpoint;
mod mlp;

pub use adam::{adam_step, Adam, AdamConfig};
pub use checkpoint::{Checkpoint, CheckpointBlock};
pub use mlp::{backward, forward, mse_loss, mse_per_component, ForwardTrace, MlpParams, MlpSpec};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NeuralError {
    #[error("expected input of width {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("empty batch")]
    EmptyBatch,
    #[error("invalid network layout: {0}")]
    Layout(String),
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Optimization settings shared by every trained model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self { learning_rate: 1.5e-4, weight_decay: 3e-3, dropout: 0.0, batch_size: 16, epochs: 1000, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), NeuralError> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(NeuralError::Config(format!("learning rate {} must be positive", self.learning_rate)));
        }
        if self.weight_decay.is_nan() || self.weight_decay < 0.0 {
            return Err(NeuralError::Config(format!("weight decay {} must be non-negative", self.weight_decay)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(NeuralError::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if self.epochs == 0 {
            return Err(NeuralError::Config("epochs must be at least 1".into()));
        }
        if self.batch_size == 0 {
            return Err(NeuralError::Config("batch size must be at least 1".into()));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig { learning_rate: self.learning_rate, weight_decay: self.weight_decay, ..AdamConfig::default() }
    }
}
