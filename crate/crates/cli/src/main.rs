use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Parser;
use qpf_core::experiments::{load_grid, run_experiment, ExperimentConfig, ExperimentId};

/// Runs one seeded power-flow surrogate experiment and writes its results.
#[derive(Debug, Parser)]
#[command(name = "qpf-lab", version)]
struct Args {
    /// One of: generalization, robustness, trainsize, stability, arch_sweep,
    /// hyper_search, shots_sweep, noise_sweep, qubit_sweep, extreme_33bus, pf_table
    experiment: String,
    /// Experiment config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated seeds, overriding the config
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Output directory, overriding the config
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run(args: Args) -> Result<bool> {
    let id: ExperimentId = args.experiment.parse()?;
    let mut cfg =
        ExperimentConfig::load(&args.config).with_context(|| format!("reading config {}", args.config.display()))?;
    if let Some(seeds) = args.seeds {
        cfg.seeds = seeds;
    }
    if let Some(out) = args.out {
        cfg.out = out;
    }
    if cfg.grid.as_os_str().is_empty() {
        bail!("config {} does not name a grid file", args.config.display());
    }
    let grid = load_grid(&cfg).with_context(|| format!("loading grid {}", cfg.grid.display()))?;
    let result = run_experiment(id, &cfg, &grid)?;
    for r in result.failures() {
        log::error!("seed {} {} {}={} failed: {}", r.seed, r.model, r.point, r.value, r.error.as_deref().unwrap_or(""));
    }
    println!("{}", result.csv_path.display());
    println!("{}", result.summary_path.display());
    let failed = result.failures().count();
    if failed > 0 {
        eprintln!("{failed} of {} runs failed", result.records.len());
    }
    Ok(failed == 0)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Args::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
