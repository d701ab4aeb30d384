//! Seeded experiment sweeps comparing the classical, quantum and hybrid
//! surrogates. Every experiment writes `<out>/<id>.csv` with one row per
//! run, `<out>/<id>.summary.json` with medians and interquartile ranges per
//! group, and (optionally) per-run datasets, checkpoints and epoch logs under
//! `<out>/<id>/seed<k>/`.
//!
//! Outputs hold no timing information, so identical configs reproduce them
//! byte for byte. Wall times go to the log.

mod config;
mod output;
mod runs;

pub use config::{ExperimentConfig, ExperimentId, NoiseMode};
pub use output::{atomic_write, group_median, median, quantile, records_to_csv, summarize, RunRecord, RunStatus};

use std::path::{Path, PathBuf};

use serde_json::Value;
use thiserror::Error;

use crate::datagen::DataError;
use crate::gridmodel::{GridCase, GridError};
use crate::surrogates::SurrogateError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("config: {0}")]
    Config(String),
    #[error("i/o: {0}")]
    Io(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Model(#[from] SurrogateError),
}

/// Records and summary of one experiment, as written to disk.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub id: ExperimentId,
    pub records: Vec<RunRecord>,
    pub summary: Value,
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
}

impl ExperimentResult {
    pub fn all_ok(&self) -> bool {
        self.records.iter().all(RunRecord::is_ok)
    }

    pub fn failures(&self) -> impl Iterator<Item = &RunRecord> {
        self.records.iter().filter(|r| !r.is_ok())
    }
}

/// Runs experiment `id` on `grid` and writes its outputs under `cfg.out`.
/// Failed model fits become flagged records; only configuration, data
/// generation and output errors abort the run.
pub fn run_experiment(
    id: ExperimentId,
    cfg: &ExperimentConfig,
    grid: &GridCase,
) -> Result<ExperimentResult, ExperimentError> {
    cfg.validate(id)?;
    let ctx = runs::Ctx::new(id, cfg, grid);
    let (records, derived) = match id {
        ExperimentId::Generalization | ExperimentId::Stability | ExperimentId::PfTable => runs::base_comparison(&ctx)?,
        ExperimentId::Robustness => runs::robustness(&ctx)?,
        ExperimentId::Trainsize => runs::trainsize(&ctx)?,
        ExperimentId::ArchSweep => runs::arch_sweep(&ctx)?,
        ExperimentId::HyperSearch => runs::hyper_search(&ctx)?,
        ExperimentId::ShotsSweep => runs::shots_sweep(&ctx)?,
        ExperimentId::NoiseSweep => runs::noise_sweep(&ctx)?,
        ExperimentId::QubitSweep => runs::qubit_sweep(&ctx)?,
        ExperimentId::Extreme33Bus => runs::extreme(&ctx)?,
    };
    let summary = summarize(id.name(), &cfg.seeds, &records, derived);
    let csv_path = cfg.out.join(format!("{id}.csv"));
    let summary_path = cfg.out.join(format!("{id}.summary.json"));
    atomic_write(&csv_path, records_to_csv(&records)?.as_bytes())?;
    let mut text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    text.push('\n');
    atomic_write(&summary_path, text.as_bytes())?;
    Ok(ExperimentResult { id, records, summary, csv_path, summary_path })
}

/// Convenience for callers holding a config file path: loads the grid the
/// config names.
pub fn load_grid(cfg: &ExperimentConfig) -> Result<GridCase, ExperimentError> {
    if cfg.grid.as_os_str().is_empty() {
        return Err(ExperimentError::Config("no grid file given".into()));
    }
    Ok(crate::gridmodel::build_grid(&crate::gridmodel::read_grid_file(Path::new(&cfg.grid))?)?)
}
