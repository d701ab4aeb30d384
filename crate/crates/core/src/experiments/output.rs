use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};

use super::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
}

/// One trained (or evaluated) model at one sweep point for one seed.
/// Metrics that do not apply to a run are `NaN`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub experiment: String,
    pub seed: u64,
    /// Model label, e.g. `nn`, `nn_7`, `qcnn_6`.
    pub model: String,
    /// Name of the swept quantity, or `base` for unswept runs.
    pub point: String,
    pub value: f64,
    pub status: RunStatus,
    pub error: Option<String>,
    pub train_mse: f64,
    pub val_mse: f64,
    pub test_mse: f64,
    pub epoch_mean: f64,
    pub epoch_std: f64,
    /// Label of the run this record is normalized against.
    pub normalizer: Option<String>,
    pub normalized_test_mse: f64,
    pub extra: BTreeMap<String, f64>,
}

impl RunRecord {
    pub fn new(experiment: &str, seed: u64, model: impl Into<String>, point: &str, value: f64) -> Self {
        Self {
            experiment: experiment.to_string(),
            seed,
            model: model.into(),
            point: point.to_string(),
            value,
            status: RunStatus::Ok,
            error: None,
            train_mse: f64::NAN,
            val_mse: f64::NAN,
            test_mse: f64::NAN,
            epoch_mean: f64::NAN,
            epoch_std: f64::NAN,
            normalizer: None,
            normalized_test_mse: f64::NAN,
            extra: BTreeMap::new(),
        }
    }

    pub fn failed(mut self, error: impl ToString) -> Self {
        self.status = RunStatus::Failed;
        self.error = Some(error.to_string());
        self
    }

    pub fn is_ok(&self) -> bool {
        self.status == RunStatus::Ok
    }

    /// Named metric, including the fixed columns.
    pub fn metric(&self, name: &str) -> Option<f64> {
        match name {
            "train_mse" => Some(self.train_mse),
            "val_mse" => Some(self.val_mse),
            "test_mse" => Some(self.test_mse),
            "epoch_mean" => Some(self.epoch_mean),
            "epoch_std" => Some(self.epoch_std),
            "normalized_test_mse" => Some(self.normalized_test_mse),
            other => self.extra.get(other).copied(),
        }
    }
}

const FIXED_METRICS: [&str; 6] = ["train_mse", "val_mse", "test_mse", "epoch_mean", "epoch_std", "normalized_test_mse"];

fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

/// Comma-separated table: fixed columns, then every extra metric name in
/// sorted order. Missing values are empty cells.
pub fn records_to_csv(records: &[RunRecord]) -> Result<String, ExperimentError> {
    let extras: Vec<String> = records
        .iter()
        .flat_map(|r| r.extra.keys().cloned())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> =
        ["experiment", "seed", "model", "point", "value", "status", "normalizer"].map(String::from).to_vec();
    header.extend(FIXED_METRICS.map(String::from));
    header.extend(extras.iter().cloned());
    header.push("error".into());
    let fmt = |e: csv::Error| ExperimentError::Io(e.to_string());
    w.write_record(&header).map_err(fmt)?;
    for r in records {
        let mut row = vec![
            r.experiment.clone(),
            r.seed.to_string(),
            r.model.clone(),
            r.point.clone(),
            num(r.value),
            if r.is_ok() { "ok".into() } else { "failed".into() },
            r.normalizer.clone().unwrap_or_default(),
        ];
        row.extend(FIXED_METRICS.iter().map(|m| num(r.metric(m).unwrap_or(f64::NAN))));
        row.extend(extras.iter().map(|k| num(r.extra.get(k).copied().unwrap_or(f64::NAN))));
        row.push(r.error.clone().unwrap_or_default());
        w.write_record(&row).map_err(fmt)?;
    }
    let bytes = w.into_inner().map_err(|e| ExperimentError::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| ExperimentError::Io(e.to_string()))
}

/// Linear-interpolation quantile of sorted values.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Median of the finite values, `NaN` when there are none.
pub fn median(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

fn stats(values: &[f64]) -> Value {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    v.sort_by(f64::total_cmp);
    let (q1, q3) = (quantile(&v, 0.25), quantile(&v, 0.75));
    json!({ "n": v.len(), "median": quantile(&v, 0.5), "q1": q1, "q3": q3, "iqr": q3 - q1 })
}

/// Median of `metric` over the successful records matching `model` and `value`.
pub fn group_median(records: &[RunRecord], model: &str, value: Option<f64>, metric: &str) -> f64 {
    median(
        records
            .iter()
            .filter(|r| r.is_ok() && r.model == model && value.is_none_or(|v| r.value == v))
            .filter_map(|r| r.metric(metric)),
    )
}

/// Median and IQR of every metric per `(model, point, value)` group, plus
/// experiment-specific derived quantities.
pub fn summarize(experiment: &str, seeds: &[u64], records: &[RunRecord], derived: Map<String, Value>) -> Value {
    let mut groups: BTreeMap<(String, String, u64), Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups.entry((r.model.clone(), r.point.clone(), r.value.to_bits())).or_default().push(r);
    }
    let mut ordered: Vec<_> = groups.into_iter().collect();
    ordered.sort_by(|a, b| {
        (&a.0 .0, &a.0 .1).cmp(&(&b.0 .0, &b.0 .1)).then(f64::from_bits(a.0 .2).total_cmp(&f64::from_bits(b.0 .2)))
    });
    let groups: Vec<Value> = ordered
        .into_iter()
        .map(|((model, point, value), rs)| {
            let ok: Vec<&&RunRecord> = rs.iter().filter(|r| r.is_ok()).collect();
            let mut names: Vec<String> = FIXED_METRICS.map(String::from).to_vec();
            names.extend(ok.iter().flat_map(|r| r.extra.keys().cloned()).collect::<std::collections::BTreeSet<_>>());
            let metrics: Map<String, Value> = names
                .into_iter()
                .filter_map(|name| {
                    let vals: Vec<f64> = ok.iter().filter_map(|r| r.metric(&name)).collect();
                    vals.iter().any(|v| v.is_finite()).then(|| (name, stats(&vals)))
                })
                .collect();
            let normalizer = rs.iter().find_map(|r| r.normalizer.clone());
            json!({
                "model": model,
                "point": point,
                "value": f64::from_bits(value),
                "ok": ok.len(),
                "failed": rs.len() - ok.len(),
                "normalizer": normalizer,
                "metrics": metrics,
            })
        })
        .collect();
    json!({
        "experiment": experiment,
        "seeds": seeds,
        "runs": records.len(),
        "failed": records.iter().filter(|r| !r.is_ok()).count(),
        "groups": groups,
        "derived": derived,
    })
}

/// Writes through a temporary sibling and renames it into place.
pub fn atomic_write(path: &Path, contents: &[u8]) -> Result<(), ExperimentError> {
    let io = |e: std::io::Error| ExperimentError::Io(format!("{}: {e}", path.display()));
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, contents).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&[7.0], 0.75), 7.0);
        assert_eq!(median([3.0, f64::NAN, 1.0, 2.0]), 2.0);
        assert!(median([]).is_nan());
    }

    #[test]
    fn csv_has_union_of_extra_columns() {
        let mut a = RunRecord::new("e", 0, "nn", "base", 0.0);
        a.test_mse = 0.5;
        a.extra.insert("z".into(), 1.0);
        let mut b = RunRecord::new("e", 1, "qnn", "base", 0.0).failed("diverged");
        b.extra.insert("a".into(), 2.0);
        let text = records_to_csv(&[a, b]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].ends_with("normalized_test_mse,a,z,error"));
        assert!(lines[1].contains(",ok,"));
        assert!(lines[2].ends_with(",failed,,,,,,,,2,,diverged"));
    }

    #[test]
    fn summary_groups_and_counts() {
        let mut recs = Vec::new();
        for (s, t) in [(0, 1.0), (1, 3.0), (2, 2.0)] {
            let mut r = RunRecord::new("e", s, "nn", "base", 0.0);
            r.test_mse = t;
            recs.push(r);
        }
        recs.push(RunRecord::new("e", 3, "nn", "base", 0.0).failed("x"));
        let s = summarize("e", &[0, 1, 2, 3], &recs, Map::new());
        assert_eq!(s["failed"], 1);
        assert_eq!(s["groups"][0]["ok"], 3);
        assert_eq!(s["groups"][0]["metrics"]["test_mse"]["median"], 2.0);
        assert_eq!(group_median(&recs, "nn", None, "test_mse"), 2.0);
    }
}
