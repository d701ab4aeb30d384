use std::path::Path;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::quantum::{CallCounts, Executor};
use super::{Surrogate, SurrogateError};
use crate::datagen::{LabeledDataset, Split};
use crate::neural::{Adam, TrainConfig};
use crate::qsim::{NoiseModel, Readout};

/// Readout and noise applied to every circuit evaluation of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantumSettings {
    pub readout: Readout,
    pub noise: Option<NoiseModel>,
}

impl Default for QuantumSettings {
    fn default() -> Self {
        Self { readout: Readout::Exact, noise: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub train_mse: f64,
    pub val_mse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epochs: Vec<EpochMetrics>,
    pub steps: u64,
    /// Epoch with the lowest validation MSE, counted from 1.
    pub best_val_epoch: usize,
    pub test_mse: f64,
    pub calls: CallCounts,
    pub wall_time_s: f64,
}

impl TrainReport {
    pub fn final_train_mse(&self) -> f64 {
        self.epochs.last().map_or(f64::NAN, |e| e.train_mse)
    }

    /// Mean and population deviation of the per-epoch train MSE.
    pub fn epoch_stats(&self) -> Result<(f64, f64), SurrogateError> {
        if self.epochs.is_empty() {
            return Err(SurrogateError::EmptySplit("epoch history"));
        }
        let n = self.epochs.len() as f64;
        let mean = self.epochs.iter().map(|e| e.train_mse).sum::<f64>() / n;
        let var = self.epochs.iter().map(|e| (e.train_mse - mean).powi(2)).sum::<f64>() / n;
        Ok((mean, var.sqrt()))
    }
}

/// Independent generator streams derived from the training seed.
const STREAM_SHUFFLE: u64 = 1;
const STREAM_DROPOUT: u64 = 2;
const STREAM_SHOTS: u64 = 3;

pub(crate) fn stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Mean over records of the summed squared component error, plus predictions.
pub fn evaluate(
    model: &Surrogate,
    xs: &[Vec<f64>],
    ys: &[Vec<f64>],
    exec: &mut Executor,
) -> Result<(f64, Vec<Vec<f64>>), SurrogateError> {
    if xs.is_empty() {
        return Err(SurrogateError::EmptySplit("evaluation"));
    }
    let mut total = 0.0;
    let mut preds = Vec::with_capacity(xs.len());
    for (x, y) in xs.iter().zip(ys) {
        let p = model.predict(x, exec)?;
        total += p.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        preds.push(p);
    }
    Ok((total / xs.len() as f64, preds))
}

/// Minibatch Adam on the training split. After every epoch the train and
/// validation MSE are measured with dropout off; the test MSE is measured
/// once with the final parameters.
pub fn train(
    model: &mut Surrogate,
    ds: &LabeledDataset,
    cfg: &TrainConfig,
    quantum: QuantumSettings,
) -> Result<TrainReport, SurrogateError> {
    cfg.validate()?;
    let (train_x, train_y) = ds.split(Split::Train);
    let (val_x, val_y) = ds.split(Split::Validation);
    let (test_x, test_y) = ds.split(Split::Test);
    if train_x.is_empty() {
        return Err(SurrogateError::EmptySplit("train"));
    }
    if val_x.is_empty() {
        return Err(SurrogateError::EmptySplit("validation"));
    }
    if test_x.is_empty() {
        return Err(SurrogateError::EmptySplit("test"));
    }
    let started = Instant::now();
    let mut exec = Executor::with_rng(quantum.readout, quantum.noise, stream(cfg.seed, STREAM_SHOTS));
    let mut shuffle_rng = stream(cfg.seed, STREAM_SHUFFLE);
    let mut dropout_rng = stream(cfg.seed, STREAM_DROPOUT);
    let mut opt = Adam::new(cfg.adam(), model.n_params());
    let mut order: Vec<usize> = (0..train_x.len()).collect();
    let mut grads = vec![0.0; model.n_params()];
    let mut epochs = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut shuffle_rng);
        for batch in order.chunks(cfg.batch_size) {
            grads.iter_mut().for_each(|g| *g = 0.0);
            let weight = 1.0 / batch.len() as f64;
            let mut loss = 0.0;
            for &i in batch {
                let rng: &mut dyn RngCore = &mut dropout_rng;
                loss += weight
                    * model.accumulate_gradient(&train_x[i], &train_y[i], weight, &mut grads, &mut exec, Some(rng))?;
            }
            if !loss.is_finite() || grads.iter().any(|g| !g.is_finite()) {
                return Err(SurrogateError::Diverged { epoch, step: opt.steps() + 1 });
            }
            opt.step(model.params_mut(), &grads);
        }
        let (train_mse, _) = evaluate(model, &train_x, &train_y, &mut exec)?;
        let (val_mse, _) = evaluate(model, &val_x, &val_y, &mut exec)?;
        if !train_mse.is_finite() || !val_mse.is_finite() {
            return Err(SurrogateError::Diverged { epoch, step: opt.steps() });
        }
        log::debug!("epoch {epoch}: train {train_mse:.6e} val {val_mse:.6e}");
        epochs.push(EpochMetrics { epoch, train_mse, val_mse });
    }
    let (test_mse, _) = evaluate(model, &test_x, &test_y, &mut exec)?;
    let best_val_epoch = epochs.iter().min_by(|a, b| a.val_mse.total_cmp(&b.val_mse)).map_or(0, |e| e.epoch);
    Ok(TrainReport {
        epochs,
        steps: opt.steps(),
        best_val_epoch,
        test_mse,
        calls: exec.calls,
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Per-epoch log as comma-separated text with full precision.
pub fn format_metrics_log(epochs: &[EpochMetrics]) -> String {
    let mut out = String::from("epoch,train_mse,val_mse\n");
    for e in epochs {
        out.push_str(&format!("{},{},{}\n", e.epoch, e.train_mse, e.val_mse));
    }
    out
}

pub fn write_metrics_log(path: impl AsRef<Path>, epochs: &[EpochMetrics]) -> Result<(), SurrogateError> {
    let path = path.as_ref();
    std::fs::write(path, format_metrics_log(epochs)).map_err(|e| SurrogateError::Io(format!("{}: {e}", path.display())))
}
