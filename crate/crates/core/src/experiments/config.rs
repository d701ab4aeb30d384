use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::gridmodel::NewtonOptions;
use crate::neural::TrainConfig;
use crate::qsim::Readout;
use crate::surrogates::{Entangler, ModelKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    Generalization,
    Robustness,
    Trainsize,
    Stability,
    ArchSweep,
    HyperSearch,
    ShotsSweep,
    NoiseSweep,
    QubitSweep,
    #[serde(rename = "extreme_33bus")]
    Extreme33Bus,
    PfTable,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 11] = [
        ExperimentId::Generalization,
        ExperimentId::Robustness,
        ExperimentId::Trainsize,
        ExperimentId::Stability,
        ExperimentId::ArchSweep,
        ExperimentId::HyperSearch,
        ExperimentId::ShotsSweep,
        ExperimentId::NoiseSweep,
        ExperimentId::QubitSweep,
        ExperimentId::Extreme33Bus,
        ExperimentId::PfTable,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::Generalization => "generalization",
            ExperimentId::Robustness => "robustness",
            ExperimentId::Trainsize => "trainsize",
            ExperimentId::Stability => "stability",
            ExperimentId::ArchSweep => "arch_sweep",
            ExperimentId::HyperSearch => "hyper_search",
            ExperimentId::ShotsSweep => "shots_sweep",
            ExperimentId::NoiseSweep => "noise_sweep",
            ExperimentId::QubitSweep => "qubit_sweep",
            ExperimentId::Extreme33Bus => "extreme_33bus",
            ExperimentId::PfTable => "pf_table",
        }
    }

    /// Sweep values used when the config leaves `sweep` empty.
    pub fn default_sweep(self) -> Vec<f64> {
        match self {
            ExperimentId::Robustness => (1..=10).map(|k| k as f64 / 100.0).collect(),
            ExperimentId::Trainsize => vec![128.0, 256.0, 384.0, 512.0],
            ExperimentId::ArchSweep => (0..=8).filter(|&d| d != 1).map(f64::from).collect(),
            ExperimentId::ShotsSweep => (4..=14).map(|k| f64::from(1u32 << k)).collect(),
            ExperimentId::NoiseSweep => (0..=10).map(|k| k as f64 / 100.0).collect(),
            ExperimentId::QubitSweep => (1..=7).map(f64::from).collect(),
            ExperimentId::Extreme33Bus => vec![1.0, 1.25, 1.5],
            _ => Vec::new(),
        }
    }

    fn default_models(self) -> Vec<ModelKind> {
        match self {
            ExperimentId::Robustness | ExperimentId::Generalization | ExperimentId::Stability => {
                vec![ModelKind::Nn, ModelKind::Qnn, ModelKind::Qcnn]
            }
            ExperimentId::Trainsize | ExperimentId::Extreme33Bus => vec![ModelKind::Nn, ModelKind::Qcnn],
            ExperimentId::PfTable => ModelKind::ALL.to_vec(),
            ExperimentId::ArchSweep | ExperimentId::HyperSearch => vec![ModelKind::Nn],
            ExperimentId::ShotsSweep | ExperimentId::NoiseSweep => vec![ModelKind::Qnn],
            ExperimentId::QubitSweep => vec![ModelKind::Qcnn],
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| ExperimentError::Config(format!("unknown experiment {s:?}")))
    }
}

/// How the noise sweep applies hardware noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseMode {
    /// Train noiseless once per seed, evaluate the test split under each noise point.
    #[default]
    Eval,
    /// Train and evaluate under each noise point.
    Train,
}

/// Flat experiment configuration, read from TOML. Every field except `grid`
/// has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Checked against the experiment named on the command line when set.
    pub experiment: Option<ExperimentId>,
    /// Grid file; relative paths resolve against the config file's directory.
    pub grid: PathBuf,
    pub seeds: Vec<u64>,
    /// Models to train; empty selects the experiment's default set.
    pub models: Vec<ModelKind>,
    /// Sweep values; empty selects the experiment's default sweep.
    pub sweep: Vec<f64>,
    pub out: PathBuf,

    pub pool_size: usize,
    pub dataset_size: usize,
    pub std_frac: f64,
    /// Fraction of training records corrupted in every experiment except
    /// the robustness sweep, which sets its own levels.
    pub corruption: f64,
    pub nr_tol: f64,
    pub nr_max_iter: usize,

    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub batch_size: usize,

    pub nn_depth: usize,
    pub qcnn_qubits: usize,
    pub qcnn_layers_before: usize,
    pub qcnn_layers_after: usize,
    pub entangler: Entangler,
    /// Shots per circuit evaluation; absent means exact expectations.
    pub shots: Option<u32>,

    pub hyper_budget: usize,
    pub noise_mode: NoiseMode,
    /// Repetitions per shot count when measuring estimator error.
    pub shot_repeats: usize,
    /// Records per extreme-condition test set.
    pub extreme_samples: usize,
    /// Write per-run datasets, checkpoints and epoch logs.
    pub artifacts: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        let newton = NewtonOptions::default();
        Self {
            experiment: None,
            grid: PathBuf::new(),
            seeds: (0..5).collect(),
            models: Vec::new(),
            sweep: Vec::new(),
            out: PathBuf::from("results"),
            pool_size: 5000,
            dataset_size: 512,
            std_frac: 0.3,
            corruption: 0.10,
            nr_tol: newton.tol,
            nr_max_iter: newton.max_iter,
            epochs: train.epochs,
            learning_rate: train.learning_rate,
            weight_decay: train.weight_decay,
            dropout: train.dropout,
            batch_size: train.batch_size,
            nn_depth: 7,
            qcnn_qubits: 6,
            qcnn_layers_before: 4,
            qcnn_layers_after: 3,
            entangler: Entangler::Chain,
            shots: None,
            hyper_budget: 64,
            noise_mode: NoiseMode::Eval,
            shot_repeats: 200,
            extreme_samples: 256,
            artifacts: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config(e.to_string()))
    }

    /// Reads a config file, resolving `grid` and `out` against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ExperimentError> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| ExperimentError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let dir = path.parent().unwrap_or(Path::new(""));
        if cfg.grid.is_relative() && !cfg.grid.as_os_str().is_empty() {
            cfg.grid = dir.join(&cfg.grid);
        }
        if cfg.out.is_relative() {
            cfg.out = dir.join(&cfg.out);
        }
        Ok(cfg)
    }

    pub fn models_for(&self, id: ExperimentId) -> Vec<ModelKind> {
        if self.models.is_empty() {
            id.default_models()
        } else {
            self.models.clone()
        }
    }

    pub fn sweep_for(&self, id: ExperimentId) -> Vec<f64> {
        if self.sweep.is_empty() {
            id.default_sweep()
        } else {
            self.sweep.clone()
        }
    }

    pub fn newton(&self) -> NewtonOptions {
        NewtonOptions { tol: self.nr_tol, max_iter: self.nr_max_iter }
    }

    pub fn readout(&self) -> Readout {
        self.shots.map_or(Readout::Exact, Readout::Shots)
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            dropout: self.dropout,
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed,
        }
    }

    pub fn validate(&self, id: ExperimentId) -> Result<(), ExperimentError> {
        let bad = |msg: String| Err(ExperimentError::Config(msg));
        if let Some(named) = self.experiment {
            if named != id {
                return bad(format!("config is for {named}, not {id}"));
            }
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.dataset_size < 4 || self.dataset_size > self.pool_size {
            return bad(format!("dataset_size {} must be in [4, pool_size {}]", self.dataset_size, self.pool_size));
        }
        if !(0.0..1.0).contains(&self.std_frac) {
            return bad(format!("std_frac {} outside [0, 1)", self.std_frac));
        }
        if !(0.0..=1.0).contains(&self.corruption) {
            return bad(format!("corruption {} outside [0, 1]", self.corruption));
        }
        if self.shots == Some(0) {
            return bad("shots must be at least 1".into());
        }
        if self.qcnn_qubits == 0 || self.qcnn_layers_before == 0 || self.qcnn_layers_after == 0 {
            return bad("QCNN needs qubits and at least one classical layer on each side".into());
        }
        self.train_config(0).validate().map_err(|e| ExperimentError::Config(e.to_string()))?;
        let sweep = self.sweep_for(id);
        let in_range = |lo: f64, hi: f64, integral: bool| {
            sweep.iter().all(|&v| v >= lo && v <= hi && (!integral || v.fract() == 0.0))
        };
        let ok = match id {
            ExperimentId::Robustness => in_range(0.0, 1.0, false),
            ExperimentId::Trainsize => in_range(1.0, self.pool_size as f64, true),
            ExperimentId::ArchSweep => in_range(0.0, 32.0, true),
            ExperimentId::ShotsSweep => in_range(1.0, f64::from(u32::MAX), true),
            ExperimentId::NoiseSweep => in_range(0.0, 0.5, false),
            ExperimentId::QubitSweep => in_range(1.0, crate::qsim::MAX_PURE_QUBITS as f64, true),
            ExperimentId::Extreme33Bus => in_range(0.0, 10.0, false),
            _ => true,
        };
        if !ok {
            return bad(format!("sweep values {sweep:?} outside the range allowed for {id}"));
        }
        if matches!(id, ExperimentId::HyperSearch) && self.hyper_budget == 0 {
            return bad("hyper_budget must be at least 1".into());
        }
        Ok(())
    }
}
