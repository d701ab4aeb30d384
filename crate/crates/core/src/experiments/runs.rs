use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use super::config::{ExperimentConfig, ExperimentId, NoiseMode};
use super::output::{atomic_write, group_median, median, RunRecord};
use super::ExperimentError;
use crate::datagen::{
    corrupt, draw_and_label, draw_with_extra_train, generate_pool, split_sizes, LabeledDataset, Split,
};
use crate::gridmodel::GridCase;
use crate::neural::{MlpSpec, TrainConfig};
use crate::qsim::{NoiseChannel, NoiseModel, Readout};
use crate::surrogates::{
    evaluate, format_metrics_log, train, Architecture, Executor, ModelKind, QcnnSpec, QnnSpec, QuantumSettings, Scaler,
    Surrogate, SurrogateError, TrainReport, DELTA_HALF_WIDTH, V_CENTER, V_HALF_WIDTH,
};

/// Purposes of the per-seed generators; each gets its own derived seed.
#[derive(Clone, Copy)]
enum Purpose {
    Pool = 1,
    Draw = 2,
    Corrupt = 3,
    Init = 4,
    Train = 5,
    Hyper = 6,
    Shots = 7,
    Extreme = 8,
    Eval = 9,
}

fn derive(seed: u64, purpose: Purpose) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose as u64);
    rng.next_u64()
}

pub(super) struct Ctx<'a> {
    pub id: ExperimentId,
    pub cfg: &'a ExperimentConfig,
    pub grid: &'a GridCase,
}

/// Result of fitting one model: the record plus, on success, the model.
struct Fit {
    record: RunRecord,
    model: Option<Surrogate>,
}

impl<'a> Ctx<'a> {
    pub fn new(id: ExperimentId, cfg: &'a ExperimentConfig, grid: &'a GridCase) -> Self {
        Self { id, cfg, grid }
    }

    fn name(&self) -> &'static str {
        self.id.name()
    }

    fn seed_dir(&self, seed: u64) -> PathBuf {
        self.cfg.out.join(self.name()).join(format!("seed{seed}"))
    }

    fn record(&self, seed: u64, model: impl Into<String>, point: &str, value: f64) -> RunRecord {
        RunRecord::new(self.name(), seed, model, point, value)
    }

    fn pq(&self) -> usize {
        self.grid.n_pq()
    }

    /// Clean dataset for `seed`, with `extra` additional training records.
    fn clean_dataset(&self, seed: u64, extra: usize) -> Result<LabeledDataset, ExperimentError> {
        let pool = generate_pool(self.grid, self.cfg.pool_size, self.cfg.std_frac, derive(seed, Purpose::Pool))?;
        let draw = derive(seed, Purpose::Draw);
        Ok(if extra == 0 {
            draw_and_label(&pool, self.cfg.dataset_size, self.grid, draw, self.cfg.newton())?
        } else {
            draw_with_extra_train(&pool, self.cfg.dataset_size, extra, self.grid, draw, self.cfg.newton())?
        })
    }

    fn corrupted(&self, ds: &LabeledDataset, seed: u64, level: f64) -> Result<LabeledDataset, ExperimentError> {
        Ok(corrupt(ds, level, derive(seed, Purpose::Corrupt))?)
    }

    fn save_dataset(&self, seed: u64, tag: &str, ds: &LabeledDataset) -> Result<(), ExperimentError> {
        if !self.cfg.artifacts {
            return Ok(());
        }
        let path = self.seed_dir(seed).join(format!("{tag}.csv"));
        atomic_write(&path, ds.to_csv()?.as_bytes())?;
        let mut meta = path.clone().into_os_string();
        meta.push(".meta.json");
        atomic_write(&PathBuf::from(meta), ds.metadata_json().as_bytes())
    }

    fn architecture(
        &self,
        kind: ModelKind,
        depth: usize,
        qubits: usize,
        dropout: f64,
    ) -> Result<Architecture, SurrogateError> {
        let m = self.pq();
        Ok(match kind {
            ModelKind::Lr => Architecture::Mlp { spec: MlpSpec::for_depth(m, 0, 0.0)? },
            ModelKind::Nn => Architecture::Mlp { spec: MlpSpec::for_depth(m, depth, dropout)? },
            ModelKind::Qnn => {
                Architecture::Qnn { spec: QnnSpec { entangler: self.cfg.entangler, ..QnnSpec::for_buses(m) } }
            }
            ModelKind::Qcnn => {
                let mut spec =
                    QcnnSpec::standard(m, qubits, self.cfg.qcnn_layers_before, self.cfg.qcnn_layers_after, dropout)?;
                spec.quantum.entangler = self.cfg.entangler;
                Architecture::Qcnn { spec }
            }
        })
    }

    fn default_architecture(&self, kind: ModelKind) -> Result<Architecture, SurrogateError> {
        self.architecture(kind, self.cfg.nn_depth, self.cfg.qcnn_qubits, self.cfg.dropout)
    }

    fn quantum(&self) -> QuantumSettings {
        QuantumSettings { readout: self.cfg.readout(), noise: None }
    }

    /// Trains one model and fills the record; failures are flagged on it.
    #[allow(clippy::too_many_arguments)]
    fn fit(
        &self,
        mut record: RunRecord,
        kind: ModelKind,
        arch: Result<Architecture, SurrogateError>,
        ds: &LabeledDataset,
        train_cfg: &TrainConfig,
        quantum: QuantumSettings,
        tag: &str,
    ) -> Result<Fit, ExperimentError> {
        let started = Instant::now();
        let outcome = (|| -> Result<(Surrogate, TrainReport), SurrogateError> {
            let arch = arch?;
            let scaler = Scaler::fit(&ds.split(Split::Train).0)?;
            let mut rng = ChaCha8Rng::seed_from_u64(derive(record.seed, Purpose::Init));
            let mut model = Surrogate::init(kind, arch, scaler, &mut rng)?;
            let report = train(&mut model, ds, train_cfg, quantum)?;
            Ok((model, report))
        })();
        let (model, report) = match outcome {
            Ok(v) => v,
            Err(e) => {
                log::warn!("{} seed {} {}: {e}", self.name(), record.seed, record.model);
                return Ok(Fit { record: record.failed(e), model: None });
            }
        };
        let (mean, std) = report.epoch_stats()?;
        record.train_mse = report.final_train_mse();
        record.val_mse = report.epochs.last().map_or(f64::NAN, |e| e.val_mse);
        record.test_mse = report.test_mse;
        record.epoch_mean = mean;
        record.epoch_std = std;
        record.extra.insert("best_val_epoch".into(), report.best_val_epoch as f64);
        record.extra.insert("steps".into(), report.steps as f64);
        if kind.is_quantum() {
            record.extra.insert("forward_calls".into(), report.calls.forward as f64);
            record.extra.insert("gradient_calls".into(), report.calls.gradient as f64);
        }
        let violations = range_violations(&model, ds, quantum, derive(record.seed, Purpose::Eval))?;
        record.extra.insert("range_violations".into(), violations as f64);
        log::info!(
            "{} seed {} {} {}={}: test mse {:.4e} ({:.1}s)",
            self.name(),
            record.seed,
            record.model,
            record.point,
            record.value,
            record.test_mse,
            started.elapsed().as_secs_f64()
        );
        if self.cfg.artifacts {
            let dir = self.seed_dir(record.seed);
            atomic_write(&dir.join(format!("{tag}.epochs.csv")), format_metrics_log(&report.epochs).as_bytes())?;
            atomic_write(&dir.join(format!("{tag}.ckpt.json")), model.checkpoint().to_json().as_bytes())?;
        }
        Ok(Fit { record, model: Some(model) })
    }
}

/// Predictions outside `v ∈ [0.85, 1.15]`, `δ ∈ [−8, 8]` over every split.
/// Only the quantum and hybrid heads are bounded by construction.
fn range_violations(
    model: &Surrogate,
    ds: &LabeledDataset,
    quantum: QuantumSettings,
    seed: u64,
) -> Result<usize, SurrogateError> {
    let mut exec = Executor::new(quantum.readout, quantum.noise, seed);
    let m = ds.n_pq;
    let mut count = 0;
    for r in &ds.records {
        let p = model.predict(&r.x, &mut exec)?;
        count += p
            .iter()
            .enumerate()
            .filter(|&(i, &y)| {
                let (lo, hi) = if i < m {
                    (V_CENTER - V_HALF_WIDTH, V_CENTER + V_HALF_WIDTH)
                } else {
                    (-DELTA_HALF_WIDTH, DELTA_HALF_WIDTH)
                };
                !(lo..=hi).contains(&y)
            })
            .count();
    }
    Ok(count)
}

fn tag(model: &str, point: &str, value: f64) -> String {
    if point == "base" {
        model.to_string()
    } else {
        format!("{model}_{point}{value}")
    }
}

/// `1 − median(model)/median(reference)` for each listed metric.
fn reductions(records: &[RunRecord], reference: &str, metrics: &[&str]) -> Map<String, Value> {
    let mut models: Vec<&str> = records.iter().map(|r| r.model.as_str()).filter(|m| *m != reference).collect();
    models.sort_unstable();
    models.dedup();
    let mut out = Map::new();
    for m in models {
        let mut per = Map::new();
        for metric in metrics {
            let ratio = group_median(records, m, None, metric) / group_median(records, reference, None, metric);
            per.insert(format!("{metric}_reduction_vs_{reference}"), json!(1.0 - ratio));
        }
        out.insert(m.to_string(), Value::Object(per));
    }
    out
}

/// Absolute-error statistics of test predictions: `(mean, std)` for `v`
/// and for `δ`.
fn error_table(
    model: &Surrogate,
    ds: &LabeledDataset,
    quantum: QuantumSettings,
    seed: u64,
) -> Result<[f64; 4], SurrogateError> {
    let (xs, ys) = ds.split(Split::Test);
    let mut exec = Executor::new(quantum.readout, quantum.noise, seed);
    let (_, preds) = evaluate(model, &xs, &ys, &mut exec)?;
    let m = ds.n_pq;
    let (mut v, mut d) = (Vec::new(), Vec::new());
    for (p, y) in preds.iter().zip(&ys) {
        for i in 0..m {
            v.push((p[i] - y[i]).abs());
            d.push((p[m + i] - y[m + i]).abs());
        }
    }
    let ms = |e: &[f64]| {
        let n = e.len() as f64;
        let mean = e.iter().sum::<f64>() / n;
        (mean, (e.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt())
    };
    let ((vm, vs), (dm, ds_)) = (ms(&v), ms(&d));
    Ok([vm, vs, dm, ds_])
}

type Outcome = Result<(Vec<RunRecord>, Map<String, Value>), ExperimentError>;

/// Generalization, stability and error-table runs share one protocol: every
/// model on the same corrupted dataset per seed.
pub(super) fn base_comparison(ctx: &Ctx) -> Outcome {
    let cfg = ctx.cfg;
    let models = cfg.models_for(ctx.id);
    let mut records = Vec::new();
    for &seed in &cfg.seeds {
        let ds = ctx.corrupted(&ctx.clean_dataset(seed, 0)?, seed, cfg.corruption)?;
        ctx.save_dataset(seed, "dataset", &ds)?;
        let tc = cfg.train_config(derive(seed, Purpose::Train));
        for &kind in &models {
            let rec = ctx.record(seed, kind.name(), "base", 0.0);
            let fit = ctx.fit(rec, kind, ctx.default_architecture(kind), &ds, &tc, ctx.quantum(), kind.name())?;
            let mut rec = fit.record;
            if let (ExperimentId::PfTable, Some(model)) = (ctx.id, &fit.model) {
                let [vm, vs, dm, dsd] = error_table(model, &ds, ctx.quantum(), derive(seed, Purpose::Eval))?;
                rec.extra.insert("v_abs_err_mean".into(), vm);
                rec.extra.insert("v_abs_err_std".into(), vs);
                rec.extra.insert("delta_abs_err_mean".into(), dm);
                rec.extra.insert("delta_abs_err_std".into(), dsd);
            }
            records.push(rec);
        }
    }
    let metrics: &[&str] = match ctx.id {
        ExperimentId::PfTable => &["v_abs_err_mean", "delta_abs_err_mean"],
        ExperimentId::Stability => &["train_mse", "epoch_mean", "epoch_std"],
        _ => &["test_mse", "train_mse", "epoch_mean", "epoch_std"],
    };
    let mut derived = Map::new();
    if models.contains(&ModelKind::Nn) {
        derived.insert("reductions".into(), Value::Object(reductions(&records, "nn", metrics)));
    }
    Ok((records, derived))
}

pub(super) fn robustness(ctx: &Ctx) -> Outcome {
    let cfg = ctx.cfg;
    let models = cfg.models_for(ctx.id);
    let levels = cfg.sweep_for(ctx.id);
    let reference_level = if levels.contains(&0.1) { 0.1 } else { levels.iter().copied().fold(f64::NAN, f64::max) };
    let normalizer = format!("qnn@corruption={reference_level}");
    let mut records = Vec::new();
    for &seed in &cfg.seeds {
        let clean = ctx.clean_dataset(seed, 0)?;
        let tc = cfg.train_config(derive(seed, Purpose::Train));
        let start = records.len();
        for &level in &levels {
            let ds = ctx.corrupted(&clean, seed, level)?;
            ctx.save_dataset(seed, &format!("dataset_corruption{level}"), &ds)?;
            for &kind in &models {
                let rec = ctx.record(seed, kind.name(), "corruption", level);
                let t = tag(kind.name(), "corruption", level);
                records.push(ctx.fit(rec, kind, ctx.default_architecture(kind), &ds, &tc, ctx.quantum(), &t)?.record);
            }
        }
        let reference = records[start..]
            .iter()
            .find(|r| r.is_ok() && r.model == "qnn" && r.value == reference_level)
            .map(|r| r.test_mse);
        if let Some(norm) = reference {
            for r in records[start..].iter_mut() {
                r.normalizer = Some(normalizer.clone());
                r.normalized_test_mse = r.test_mse / norm;
            }
        }
    }
    let (lo, hi) = (
        levels.iter().copied().fold(f64::INFINITY, f64::min),
        levels.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    );
    let mut ratios = Map::new();
    for kind in &models {
        let r = group_median(&records, kind.name(), Some(hi), "test_mse")
            / group_median(&records, kind.name(), Some(lo), "test_mse");
        ratios.insert(kind.name().into(), json!(r));
    }
    let mut derived = Map::new();
    derived.insert("degradation_ratio".into(), json!({ "from": lo, "to": hi, "median_test_mse_ratio": ratios }));
    Ok((records, derived))
}

pub(super) fn trainsize(ctx: &Ctx) -> Outcome {
    let cfg = ctx.cfg;
    let models = cfg.models_for(ctx.id);
    let sizes: Vec<usize> = cfg.sweep_for(ctx.id).iter().map(|&v| v as usize).collect();
    let (base_train, _, _) = split_sizes(cfg.dataset_size);
    let largest = sizes.iter().copied().max().unwrap_or(base_train).max(base_train);
    let reference = models.iter().copied().find(|&k| k != ModelKind::Nn).unwrap_or(ModelKind::Qcnn);
    let normalizer = format!("{reference}@train_size={base_train}");
    let mut records = Vec::new();
    for &seed in &cfg.seeds {
        let full = ctx.clean_dataset(seed, largest - base_train)?;
        let tc = cfg.train_config(derive(seed, Purpose::Train));
        let start = records.len();
        for &kind in models.iter().filter(|&&k| k != ModelKind::Nn) {
            let ds = ctx.corrupted(&full.with_train_size(base_train)?, seed, cfg.corruption)?;
            let rec = ctx.record(seed, kind.name(), "train_size", base_train as f64);
            let t = tag(kind.name(), "train_size", base_train as f64);
            records.push(ctx.fit(rec, kind, ctx.default_architecture(kind), &ds, &tc, ctx.quantum(), &t)?.record);
        }
        if models.contains(&ModelKind::Nn) {
            for &n in &sizes {
                let ds = ctx.corrupted(&full.with_train_size(n)?, seed, cfg.corruption)?;
                ctx.save_dataset(seed, &format!("dataset_train_size{n}"), &ds)?;
                let rec = ctx.record(seed, "nn", "train_size", n as f64);
                let t = tag("nn", "train_size", n as f64);
                let arch = ctx.default_architecture(ModelKind::Nn);
                records.push(ctx.fit(rec, ModelKind::Nn, arch, &ds, &tc, ctx.quantum(), &t)?.record);
            }
        }
        let norm = records[start..].iter().find(|r| r.is_ok() && r.model == reference.name()).map(|r| r.test_mse);
        if let Some(norm) = norm {
            for r in records[start..].iter_mut() {
                r.normalizer = Some(normalizer.clone());
                r.normalized_test_mse = r.test_mse / norm;
            }
        }
    }
    let curve: Vec<f64> = sizes.iter().map(|&n| group_median(&records, "nn", Some(n as f64), "test_mse")).collect();
    let inversions = curve.windows(2).filter(|w| w[1] > w[0]).count();
    let reference_median = group_median(&records, reference.name(), None, "test_mse");
    let mut derived = Map::new();
    derived.insert(
        "nn_median_test_mse".into(),
        json!(sizes.iter().zip(&curve).map(|(n, v)| json!([n, v])).collect::<Vec<_>>()),
    );
    derived.insert("nn_curve_inversions".into(), json!(inversions));
    derived.insert(format!("{reference}_median_test_mse_at_{base_train}"), json!(reference_median));
    derived.insert(
        format!("nn_at_{largest}_over_{reference}_at_{base_train}"),
        json!(group_median(&records, "nn", Some(largest as f64), "test_mse") / reference_median),
    );
    Ok((records, derived))
}

fn depth_label(depth: usize) -> String {
    if depth == 0 {
        "lr".into()
    } else {
        format!("nn_{depth}")
    }
}

pub(super) fn arch_sweep(ctx: &Ctx) -> Outcome {
    let cfg = ctx.cfg;
    let depths: Vec<usize> = cfg.sweep_for(ctx.id).iter().map(|&v| v as usize).collect();
    let reference = depth_label(cfg.nn_depth);
    let mut records = Vec::new();
    for &seed in &cfg.seeds {
        let ds = ctx.corrupted(&ctx.clean_dataset(seed, 0)?, seed, cfg.corruption)?;
        ctx.save_dataset(seed, "dataset", &ds)?;
        let tc = cfg.train_config(derive(seed, Purpose::Train));
        let start = records.len();
        for &d in &depths {
            let (label, kind) = if d == 0 { (depth_label(0), ModelKind::Lr) } else { (depth_label(d), ModelKind::Nn) };
            let rec = ctx.record(seed, label.clone(), "depth", d as f64);
            let arch = ctx.architecture(kind, d, cfg.qcnn_qubits, cfg.dropout);
            records.push(ctx.fit(rec, kind, arch, &ds, &tc, ctx.quantum(), &label)?.record);
        }
        normalize_by_model(&mut records[start..], &reference);
    }
    let medians: Vec<(usize, f64)> =
        depths.iter().map(|&d| (d, group_median(&records, &depth_label(d), None, "test_mse"))).collect();
    let best = medians.iter().filter(|(_, v)| v.is_finite()).min_by(|a, b| a.1.total_cmp(&b.1));
    let mut derived = Map::new();
    derived.insert(
        "median_test_mse".into(),
        json!(medians.iter().map(|(d, v)| json!([depth_label(*d), v])).collect::<Vec<_>>()),
    );
    if let Some((d, v)) = best {
        derived.insert("best".into(), json!({ "model": depth_label(*d), "median_test_mse": v }));
    }
    Ok((records, derived))
}

fn normalize_by_model(records: &mut [RunRecord], reference: &str) {
    let norm = records.iter().find(|r| r.is_ok() && r.model == reference).map(|r| r.test_mse);
    if let Some(norm) = norm {
        for r in records.iter_mut() {
            r.normalizer = Some(reference.to_string());
            r.normalized_test_mse = r.test_mse / norm;
        }
    }
}

pub(super) fn hyper_search(ctx: &Ctx) -> Outcome {
    let cfg = ctx.cfg;
    let mut records = Vec::new();
    let mut best = Vec::new();
    for &seed in &cfg.seeds {
        let ds = ctx.corrupted(&ctx.clean_dataset(seed, 0)?, seed, cfg.corruption)?;
        ctx.save_dataset(seed, "dataset", &ds)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, Purpose::Hyper));
        let start = records.len();
        for trial in 0..cfg.hyper_budget {
            let lr = 10f64.powf(rng.random_range(-6.0..=-1.0));
            let decay = 10f64.powf(rng.random_range(-6.0..=-1.0));
            let dropout = rng.random_range(0.0..=0.02);
            let tc = TrainConfig {
                learning_rate: lr,
                weight_decay: decay,
                dropout,
                ..cfg.train_config(derive(seed, Purpose::Train))
            };
            let label = depth_label(cfg.nn_depth);
            let mut rec = ctx.record(seed, label, "trial", trial as f64);
            rec.extra.insert("learning_rate".into(), lr);
            rec.extra.insert("weight_decay".into(), decay);
            rec.extra.insert("dropout".into(), dropout);
            let arch = ctx.architecture(ModelKind::Nn, cfg.nn_depth, cfg.qcnn_qubits, dropout);
            let t = format!("trial{trial}");
            records.push(ctx.fit(rec, ModelKind::Nn, arch, &ds, &tc, ctx.quantum(), &t)?.record);
        }
        if let Some(r) = records[start..].iter().filter(|r| r.is_ok()).min_by(|a, b| a.val_mse.total_cmp(&b.val_mse)) {
            best.push(json!({
                "seed": seed,
                "trial": r.value,
                "learning_rate": r.extra["learning_rate"],
                "weight_decay": r.extra["weight_decay"],
                "dropout": r.extra["dropout"],
                "val_mse": r.val_mse,
                "train_mse": r.train_mse,
                "test_mse": r.test_mse,
            }));
        }
    }
    let mut derived = Map::new();
    derived.insert("selection".into(), json!("lowest final validation MSE per seed"));
    derived.insert("best_per_seed".into(), Value::Array(best));
    Ok((records, derived))
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Shot-estimator error on a random circuit instance, and the test MSE of
/// an exactly trained model read out with finite shots.
pub(super) fn shots_sweep(ctx: &Ctx) -> Outcome {
    let cfg = ctx.cfg;
    let shots: Vec<u32> = cfg.sweep_for(ctx.id).iter().map(|&v| v as u32).collect();
    let models = cfg.models_for(ctx.id);
    let mut records = Vec::new();
    for &seed in &cfg.seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, Purpose::Shots));
        let spec = QnnSpec { entangler: cfg.entangler, ..QnnSpec::for_buses(ctx.pq()) };
        let layer = crate::surrogates::QuantumLayer::new(spec)?;
        let angles: Vec<f64> = (0..spec.qubits).map(|_| rng.random_range(-1.5..1.5)).collect();
        let weights: Vec<f64> = (0..spec.n_params()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let exact = layer.expectations(&angles, &weights, &mut Executor::exact())?;
        for &n in &shots {
            let mut exec = Executor::new(Readout::Shots(n), None, rng.next_u64());
            let (mut abs, mut sq, mut count) = (0.0, 0.0, 0.0);
            for _ in 0..cfg.shot_repeats {
                let est = layer.expectations(&angles, &weights, &mut exec)?;
                for (e, x) in est.iter().zip(&exact) {
                    abs += (e - x).abs();
                    sq += (e - x) * (e - x);
                    count += 1.0;
                }
            }
            let mut rec = ctx.record(seed, "estimator", "shots", f64::from(n));
            rec.extra.insert("abs_error".into(), abs / count);
            rec.extra.insert("rms_error".into(), (sq / count).sqrt());
            records.push(rec);
        }

        let ds = ctx.corrupted(&ctx.clean_dataset(seed, 0)?, seed, cfg.corruption)?;
        ctx.save_dataset(seed, "dataset", &ds)?;
        let tc = cfg.train_config(derive(seed, Purpose::Train));
        let exact_q = QuantumSettings { readout: Readout::Exact, noise: None };
        let (xs, ys) = ds.split(Split::Test);
        for &kind in models.iter().filter(|k| k.is_quantum()) {
            let rec = ctx.record(seed, kind.name(), "shots", 0.0);
            let fit = ctx.fit(rec, kind, ctx.default_architecture(kind), &ds, &tc, exact_q, kind.name())?;
            let base = fit.record.clone();
            records.push(fit.record);
            for &n in &shots {
                let mut rec = base.clone();
                rec.value = f64::from(n);
                rec.extra.clear();
                if let Some(model) = &fit.model {
                    let mut exec = Executor::new(Readout::Shots(n), None, derive(seed, Purpose::Eval) ^ u64::from(n));
                    match evaluate(model, &xs, &ys, &mut exec) {
                        Ok((mse, _)) => rec.test_mse = mse,
                        Err(e) => rec = rec.failed(e),
                    }
                }
                records.push(rec);
            }
        }
    }
    let err_curve: Vec<(f64, f64)> = shots
        .iter()
        .map(|&n| (f64::from(n), group_median(&records, "estimator", Some(f64::from(n)), "abs_error")))
        .collect();
    let mut derived = Map::new();
    derived
        .insert("estimator_abs_error".into(), json!(err_curve.iter().map(|(n, e)| json!([n, e])).collect::<Vec<_>>()));
    derived.insert("estimator_log_log_slope".into(), json!(log_log_slope(&err_curve)));
    for kind in models.iter().filter(|k| k.is_quantum()) {
        let curve: Vec<Value> = shots
            .iter()
            .map(|&n| json!([n, group_median(&records, kind.name(), Some(f64::from(n)), "test_mse")]))
            .collect();
        derived.insert(format!("{kind}_median_test_mse"), Value::Array(curve));
        derived.insert(
            format!("{kind}_exact_median_test_mse"),
            json!(group_median(&records, kind.name(), Some(0.0), "test_mse")),
        );
    }
    Ok((records, derived))
}

pub(super) fn noise_sweep(ctx: &Ctx) -> Outcome {
    let cfg = ctx.cfg;
    let levels = cfg.sweep_for(ctx.id);
    let models: Vec<ModelKind> = cfg.models_for(ctx.id).into_iter().filter(|k| k.is_quantum()).collect();
    let mut records = Vec::new();
    for &seed in &cfg.seeds {
        let ds = ctx.corrupted(&ctx.clean_dataset(seed, 0)?, seed, cfg.corruption)?;
        ctx.save_dataset(seed, "dataset", &ds)?;
        let tc = cfg.train_config(derive(seed, Purpose::Train));
        let (xs, ys) = ds.split(Split::Test);
        for &kind in &models {
            let noiseless = match cfg.noise_mode {
                NoiseMode::Eval => {
                    let rec = ctx.record(seed, kind.name(), "noiseless", 0.0);
                    let fit =
                        ctx.fit(rec, kind, ctx.default_architecture(kind), &ds, &tc, ctx.quantum(), kind.name())?;
                    records.push(fit.record.clone());
                    Some(fit)
                }
                NoiseMode::Train => None,
            };
            for channel in NoiseChannel::ALL {
                for &level in &levels {
                    let noise = NoiseModel::single_channel(channel, level);
                    let rec = ctx.record(seed, kind.name(), channel.name(), level);
                    let rec = match &noiseless {
                        Some(fit) => {
                            let mut rec =
                                RunRecord { point: channel.name().into(), value: level, ..fit.record.clone() };
                            rec.extra.clear();
                            if let Some(model) = &fit.model {
                                let mut exec = Executor::new(
                                    cfg.readout(),
                                    Some(noise),
                                    derive(seed, Purpose::Eval) ^ level.to_bits(),
                                );
                                match evaluate(model, &xs, &ys, &mut exec) {
                                    Ok((mse, _)) => rec.test_mse = mse,
                                    Err(e) => rec = rec.failed(e),
                                }
                            }
                            rec
                        }
                        None => {
                            let q = QuantumSettings { readout: cfg.readout(), noise: Some(noise) };
                            let t = tag(kind.name(), channel.name(), level);
                            ctx.fit(rec, kind, ctx.default_architecture(kind), &ds, &tc, q, &t)?.record
                        }
                    };
                    records.push(rec);
                }
            }
        }
    }
    let mut derived = Map::new();
    for kind in &models {
        let mut per = Map::new();
        for channel in NoiseChannel::ALL {
            let curve: Vec<Value> = levels
                .iter()
                .map(|&l| {
                    let v = median(
                        records
                            .iter()
                            .filter(|r| {
                                r.is_ok() && r.model == kind.name() && r.point == channel.name() && r.value == l
                            })
                            .map(|r| r.test_mse),
                    );
                    json!([l, v])
                })
                .collect();
            per.insert(channel.name().into(), Value::Array(curve));
        }
        derived.insert(format!("{kind}_median_test_mse"), Value::Object(per));
    }
    derived.insert("mode".into(), json!(format!("{:?}", cfg.noise_mode).to_lowercase()));
    Ok((records, derived))
}

pub(super) fn qubit_sweep(ctx: &Ctx) -> Outcome {
    let cfg = ctx.cfg;
    let qubits: Vec<usize> = cfg.sweep_for(ctx.id).iter().map(|&v| v as usize).collect();
    let reference = format!("qcnn_{}", cfg.qcnn_qubits);
    let mut records = Vec::new();
    for &seed in &cfg.seeds {
        let ds = ctx.corrupted(&ctx.clean_dataset(seed, 0)?, seed, cfg.corruption)?;
        ctx.save_dataset(seed, "dataset", &ds)?;
        let tc = cfg.train_config(derive(seed, Purpose::Train));
        let start = records.len();
        for &q in &qubits {
            let label = format!("qcnn_{q}");
            let rec = ctx.record(seed, label.clone(), "qubits", q as f64);
            let arch = ctx.architecture(ModelKind::Qcnn, cfg.nn_depth, q, cfg.dropout);
            records.push(ctx.fit(rec, ModelKind::Qcnn, arch, &ds, &tc, ctx.quantum(), &label)?.record);
        }
        normalize_by_model(&mut records[start..], &reference);
    }
    let curve: Vec<Value> = qubits
        .iter()
        .map(|&q| {
            let l = format!("qcnn_{q}");
            json!([q, group_median(&records, &l, None, "train_mse"), group_median(&records, &l, None, "test_mse")])
        })
        .collect();
    let mut derived = Map::new();
    derived.insert("median_train_test_mse".into(), Value::Array(curve));
    Ok((records, derived))
}

/// Trains on the nominal dataset, then evaluates on test sets drawn around
/// loads scaled by each sweep factor. Record MSE here is averaged over
/// output components, unlike the training loss.
pub(super) fn extreme(ctx: &Ctx) -> Outcome {
    let cfg = ctx.cfg;
    let factors = cfg.sweep_for(ctx.id);
    let models = cfg.models_for(ctx.id);
    let (base_p, base_q) = ctx.grid.pq_loads();
    let mut records = Vec::new();
    for &seed in &cfg.seeds {
        let ds = ctx.corrupted(&ctx.clean_dataset(seed, 0)?, seed, cfg.corruption)?;
        ctx.save_dataset(seed, "dataset", &ds)?;
        let tc = cfg.train_config(derive(seed, Purpose::Train));
        let mut extremes = Vec::new();
        for (k, &f) in factors.iter().enumerate() {
            let p: Vec<f64> = base_p.iter().map(|v| v * f).collect();
            let q: Vec<f64> = base_q.iter().map(|v| v * f).collect();
            let scaled = ctx.grid.with_pq_loads(&p, &q)?;
            let s = derive(seed, Purpose::Extreme).wrapping_add(k as u64);
            let pool = generate_pool(&scaled, cfg.extreme_samples, cfg.std_frac, s)?;
            let test = draw_and_label(&pool, cfg.extreme_samples, &scaled, s, cfg.newton())?;
            ctx.save_dataset(seed, &format!("extreme_load_factor{f}"), &test)?;
            let xs: Vec<Vec<f64>> = test.records.iter().map(|r| r.x.clone()).collect();
            let ys: Vec<Vec<f64>> = test.records.iter().map(|r| r.y.clone()).collect();
            extremes.push((f, xs, ys));
        }
        for &kind in &models {
            let rec = ctx.record(seed, kind.name(), "load_factor", 0.0);
            let fit = ctx.fit(rec, kind, ctx.default_architecture(kind), &ds, &tc, ctx.quantum(), kind.name())?;
            for (f, xs, ys) in &extremes {
                let mut rec = RunRecord { value: *f, ..fit.record.clone() };
                rec.extra.clear();
                if let Some(model) = &fit.model {
                    let mut exec = Executor::new(cfg.readout(), None, derive(seed, Purpose::Eval));
                    match evaluate(model, xs, ys, &mut exec) {
                        Ok((_, preds)) => {
                            // Per-record MSE over the output components.
                            let per: Vec<f64> = preds
                                .iter()
                                .zip(ys)
                                .map(|(p, y)| {
                                    p.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64
                                })
                                .collect();
                            rec.extra.insert("max_record_mse".into(), per.iter().copied().fold(0.0, f64::max));
                            rec.extra.insert("mean_record_mse".into(), per.iter().sum::<f64>() / per.len() as f64);
                        }
                        Err(e) => rec = rec.failed(e),
                    }
                }
                records.push(rec);
            }
        }
    }
    let mut derived = Map::new();
    for kind in &models {
        let curve: Vec<Value> = factors
            .iter()
            .map(|&f| json!([f, group_median(&records, kind.name(), Some(f), "max_record_mse")]))
            .collect();
        derived.insert(format!("{kind}_median_max_record_mse"), Value::Array(curve));
    }
    Ok((records, derived))
}
