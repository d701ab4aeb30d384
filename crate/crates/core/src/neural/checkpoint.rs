use std::path::Path;

use serde::{Deserialize, Serialize};

use super::NeuralError;

/// Named parameter block. `widths` is set for network blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckpointBlock {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub widths: Option<Vec<usize>>,
    pub values: Vec<f64>,
}

/// Model snapshot as JSON. Floats are written in shortest round-trip form,
/// so loading restores every parameter bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub model: String,
    pub blocks: Vec<CheckpointBlock>,
}

impl Checkpoint {
    pub fn block(&self, name: &str) -> Result<&CheckpointBlock, NeuralError> {
        self.blocks
            .iter()
            .find(|b| b.name == name)
            .ok_or_else(|| NeuralError::Checkpoint(format!("missing block {name:?}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, NeuralError> {
        serde_json::from_str(text).map_err(|e| NeuralError::Checkpoint(e.to_string()))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NeuralError> {
        std::fs::write(path, self.to_json()).map_err(|e| NeuralError::Checkpoint(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NeuralError> {
        let text = std::fs::read_to_string(path).map_err(|e| NeuralError::Checkpoint(e.to_string()))?;
        Self::from_json(&text)
    }
}
