//! Load-scenario datasets labeled by Newton-Raphson.
//!
//! Each PQ bus keeps its base power factor while its apparent power is drawn
//! from a normal distribution centred on the base value. Features are the
//! PQ-bus demands `(p_1..p_m, q_1..q_m)` in pu, labels the solved voltages
//! `(v_1..v_m, δ_1..δ_m)` in pu and degrees.

use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gridmodel::{solve_newton_raphson, GridCase, GridError, NewtonOptions};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("pool exhausted: {converged} of {requested} samples converged ({discarded} discarded)")]
    PoolExhausted { requested: usize, converged: usize, discarded: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("dataset file: {0}")]
    Io(String),
    #[error("dataset file: {0}")]
    Format(String),
}

/// Sampled PQ-bus demands, one `(p, q)` pair of vectors per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePool {
    pub p: Vec<Vec<f64>>,
    pub q: Vec<Vec<f64>>,
    pub seed: u64,
    pub std_frac: f64,
    /// PQ-bus base demands the pool was drawn around.
    pub base_p: Vec<f64>,
    pub base_q: Vec<f64>,
}

impl SamplePool {
    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    /// Feature vector `(p_1..p_m, q_1..q_m)` of sample `i`.
    pub fn features(&self, i: usize) -> Vec<f64> {
        self.p[i].iter().chain(&self.q[i]).copied().collect()
    }
}

/// Draws `n` scenarios. Negative apparent-power draws are clamped to zero; a
/// bus with zero base load stays at zero.
pub fn generate_pool(grid: &GridCase, n: usize, std_frac: f64, seed: u64) -> Result<SamplePool, DataError> {
    if n == 0 {
        return Err(DataError::Invalid("pool size must be at least 1".into()));
    }
    if !(0.0..1.0).contains(&std_frac) {
        return Err(DataError::Invalid(format!("std_frac {std_frac} outside [0, 1)")));
    }
    let (base_p, base_q) = grid.pq_loads();
    let m = base_p.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = vec![vec![0.0; m]; n];
    let mut q = vec![vec![0.0; m]; n];
    for bus in 0..m {
        let s_base = base_p[bus].hypot(base_q[bus]);
        if s_base == 0.0 {
            log::warn!("PQ bus {} has zero base load; kept fixed at zero", grid.bus_ids()[grid.pq_buses()[bus]]);
            continue;
        }
        let pf = base_p[bus] / s_base;
        let q_sign = if base_q[bus] < 0.0 { -1.0 } else { 1.0 };
        let normal = Normal::new(s_base, std_frac * s_base)
            .map_err(|e| DataError::Invalid(format!("apparent-power distribution: {e}")))?;
        for k in 0..n {
            let s = normal.sample(&mut rng).max(0.0);
            let pk = s * pf;
            p[k][bus] = pk;
            q[k][bus] = q_sign * (s * s - pk * pk).max(0.0).sqrt();
        }
    }
    Ok(SamplePool { p, q, seed, std_frac, base_p, base_q })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        })
    }
}

impl std::str::FromStr for Split {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "validation" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(DataError::Format(format!("unknown split {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Corruption {
    pub level: f64,
    pub seed: u64,
    /// Dataset row indices of the perturbed training records.
    pub records: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub grid: String,
    pub pool_seed: u64,
    pub pool_size: usize,
    pub std_frac: f64,
    pub draw_seed: u64,
    /// Drawn samples rejected because Newton-Raphson did not converge.
    pub discarded: usize,
    pub newton: NewtonOptions,
    pub corruption: Option<Corruption>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub n_pq: usize,
    pub records: Vec<Record>,
    pub provenance: Provenance,
}

/// Split sizes for `k` records: train and validation get `⌊k/4⌋` each, test
/// gets the remainder.
pub fn split_sizes(k: usize) -> (usize, usize, usize) {
    let quarter = k / 4;
    (quarter, quarter, k - 2 * quarter)
}

/// Draws `k` samples without replacement and labels them. Samples whose
/// solve does not converge are discarded and replaced by the next draw.
pub fn draw_and_label(
    pool: &SamplePool,
    k: usize,
    grid: &GridCase,
    seed: u64,
    newton: NewtonOptions,
) -> Result<LabeledDataset, DataError> {
    draw_with_extra_train(pool, k, 0, grid, seed, newton)
}

/// As [`draw_and_label`], then continues the same draw for `extra` more
/// training records appended after the test split. The first `k` records
/// equal those of `draw_and_label` with the same seed.
pub fn draw_with_extra_train(
    pool: &SamplePool,
    k: usize,
    extra: usize,
    grid: &GridCase,
    seed: u64,
    newton: NewtonOptions,
) -> Result<LabeledDataset, DataError> {
    let total = k + extra;
    if k == 0 || total > pool.len() {
        return Err(DataError::Invalid(format!("cannot draw {total} records from a pool of {}", pool.len())));
    }
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let m = grid.n_pq();
    let (n_train, n_val, _) = split_sizes(k);
    let mut records = Vec::with_capacity(k);
    let mut discarded = 0;
    for &i in &order {
        if records.len() == total {
            break;
        }
        let case = grid.with_pq_loads(&pool.p[i], &pool.q[i])?;
        let sol = solve_newton_raphson(&case, newton)?;
        if !sol.converged {
            discarded += 1;
            continue;
        }
        let y: Vec<f64> = grid
            .pq_buses()
            .iter()
            .map(|&b| sol.v[b])
            .chain(grid.pq_buses().iter().map(|&b| sol.delta_deg[b]))
            .collect();
        let split = match records.len() {
            r if r < n_train => Split::Train,
            r if r < n_train + n_val => Split::Validation,
            r if r < k => Split::Test,
            _ => Split::Train,
        };
        records.push(Record { x: pool.features(i), y, split });
    }
    if discarded > 0 {
        log::info!("discarded {discarded} non-convergent samples");
    }
    if records.len() < total {
        return Err(DataError::PoolExhausted { requested: total, converged: records.len(), discarded });
    }
    debug_assert_eq!(records[0].x.len(), 2 * m);
    Ok(LabeledDataset {
        n_pq: m,
        records,
        provenance: Provenance {
            grid: grid.name().to_string(),
            pool_seed: pool.seed,
            pool_size: pool.len(),
            std_frac: pool.std_frac,
            draw_seed: seed,
            discarded,
            newton,
            corruption: None,
        },
    })
}

/// Perturbs `⌊level · n_train⌋` uniformly chosen training records: every
/// feature gets `±U[0,1]`, every label `±U[0,0.1]`, signs drawn independently.
/// Validation and test records are untouched.
pub fn corrupt(ds: &LabeledDataset, level: f64, seed: u64) -> Result<LabeledDataset, DataError> {
    if !(0.0..=1.0).contains(&level) {
        return Err(DataError::Invalid(format!("corruption level {level} outside [0, 1]")));
    }
    let mut out = ds.clone();
    let mut train: Vec<usize> = ds.indices(Split::Train);
    let count = (level * train.len() as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (chosen, _) = train.partial_shuffle(&mut rng, count);
    let mut chosen = chosen.to_vec();
    chosen.sort_unstable();
    let signed = |rng: &mut ChaCha8Rng, scale: f64| {
        let magnitude = rng.random::<f64>() * scale;
        if rng.random::<bool>() {
            magnitude
        } else {
            -magnitude
        }
    };
    for &i in &chosen {
        let rec = &mut out.records[i];
        for v in rec.x.iter_mut() {
            *v += signed(&mut rng, 1.0);
        }
        for v in rec.y.iter_mut() {
            *v += signed(&mut rng, 0.1);
        }
    }
    out.provenance.corruption = Some(Corruption { level, seed, records: chosen });
    Ok(out)
}

impl LabeledDataset {
    pub fn indices(&self, split: Split) -> Vec<usize> {
        self.records.iter().enumerate().filter(|(_, r)| r.split == split).map(|(i, _)| i).collect()
    }

    pub fn split(&self, split: Split) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        self.records.iter().filter(|r| r.split == split).map(|r| (r.x.clone(), r.y.clone())).unzip()
    }

    pub fn count(&self, split: Split) -> usize {
        self.records.iter().filter(|r| r.split == split).count()
    }

    /// Keeps the first `n` training records and every other record; used for
    /// training-size sweeps on a dataset drawn at the largest size.
    pub fn with_train_size(&self, n: usize) -> Result<LabeledDataset, DataError> {
        let available = self.count(Split::Train);
        if n == 0 || n > available {
            return Err(DataError::Invalid(format!("requested {n} training records, {available} available")));
        }
        let mut kept = 0;
        let mut out = self.clone();
        out.records.retain(|r| {
            if r.split != Split::Train {
                return true;
            }
            kept += 1;
            kept <= n
        });
        Ok(out)
    }

    pub fn header(&self) -> Vec<String> {
        let m = self.n_pq;
        let mut out: Vec<String> =
            ["p", "q", "v", "delta"].iter().flat_map(|prefix| (1..=m).map(move |i| format!("{prefix}_{i}"))).collect();
        out.push("split".to_string());
        out
    }

    /// CSV text: the header row, then one row per record with values in
    /// shortest round-trip form.
    pub fn to_csv(&self) -> Result<String, DataError> {
        let fmt_err = |e: &dyn fmt::Display| DataError::Format(e.to_string());
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header()).map_err(|e| fmt_err(&e))?;
        for r in &self.records {
            let row: Vec<String> = r.x.iter().chain(&r.y).map(|v| v.to_string()).chain([r.split.to_string()]).collect();
            w.write_record(&row).map_err(|e| fmt_err(&e))?;
        }
        let bytes = w.into_inner().map_err(|e| fmt_err(&e))?;
        String::from_utf8(bytes).map_err(|e| fmt_err(&e))
    }

    pub fn metadata_json(&self) -> String {
        serde_json::to_string_pretty(&self.provenance).expect("provenance serializes")
    }

    /// Writes the dataset as CSV plus a `<path>.meta.json` provenance sidecar.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), DataError> {
        let path = path.as_ref();
        let io = |e: std::io::Error| DataError::Io(format!("{}: {e}", path.display()));
        std::fs::write(path, self.to_csv()?).map_err(io)?;
        std::fs::write(sidecar_path(path), self.metadata_json()).map_err(io)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<LabeledDataset, DataError> {
        let path = path.as_ref();
        let io = |e: &dyn fmt::Display| DataError::Io(format!("{}: {e}", path.display()));
        let mut rd = csv::Reader::from_path(path).map_err(|e| io(&e))?;
        let header = rd.headers().map_err(|e| io(&e))?.clone();
        if header.len() < 5 || (header.len() - 1) % 4 != 0 {
            return Err(DataError::Format(format!("unexpected header {header:?}")));
        }
        let m = (header.len() - 1) / 4;
        let mut records = Vec::new();
        for row in rd.records() {
            let row = row.map_err(|e| io(&e))?;
            let values: Vec<f64> = row
                .iter()
                .take(4 * m)
                .map(|s| s.parse::<f64>().map_err(|e| DataError::Format(format!("{s:?}: {e}"))))
                .collect::<Result<_, _>>()?;
            records.push(Record {
                x: values[..2 * m].to_vec(),
                y: values[2 * m..].to_vec(),
                split: row[4 * m].parse()?,
            });
        }
        let meta = std::fs::read_to_string(sidecar_path(path)).map_err(|e| io(&e))?;
        let provenance = serde_json::from_str(&meta).map_err(|e| DataError::Format(e.to_string()))?;
        let ds = LabeledDataset { n_pq: m, records, provenance };
        if ds.header() != header.iter().collect::<Vec<_>>() {
            return Err(DataError::Format(format!("unexpected header {header:?}")));
        }
        Ok(ds)
    }
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    s.into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gridmodel::feeders;

    #[test]
    fn mean_draw_reconstructs_base() {
        let (s, pf) = (5.0_f64, 3.0 / 5.0);
        let p = s * pf;
        let q = (s * s - p * p).sqrt();
        assert_eq!((p, q), (3.0, 4.0));
    }

    #[test]
    fn zero_std_reproduces_base_case() {
        let grid = feeders::four_bus();
        let pool = generate_pool(&grid, 10, 0.0, 3).unwrap();
        let (bp, bq) = grid.pq_loads();
        for k in 0..10 {
            for b in 0..3 {
                assert!((pool.p[k][b] - bp[b]).abs() < 1e-15);
                assert!((pool.q[k][b] - bq[b]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn reconstruction_identity_and_nonnegative_q() {
        let grid = feeders::four_bus();
        let pool = generate_pool(&grid, 500, 0.3, 11).unwrap();
        let (bp, bq) = grid.pq_loads();
        for k in 0..pool.len() {
            for b in 0..3 {
                let (p, q) = (pool.p[k][b], pool.q[k][b]);
                assert!(q >= 0.0);
                let pf = bp[b] / bp[b].hypot(bq[b]);
                let s = p / pf;
                assert!(((p * p + q * q) - s * s).abs() <= 1e-12 * s * s.max(1.0));
            }
        }
    }

    #[test]
    fn invalid_pool_arguments() {
        let grid = feeders::four_bus();
        assert!(generate_pool(&grid, 0, 0.3, 1).is_err());
        assert!(generate_pool(&grid, 5, 1.0, 1).is_err());
    }

    #[test]
    fn extra_train_extends_the_base_draw() {
        let grid = feeders::four_bus();
        let pool = generate_pool(&grid, 200, 0.3, 4).unwrap();
        let base = draw_and_label(&pool, 40, &grid, 9, NewtonOptions::default()).unwrap();
        let ext = draw_with_extra_train(&pool, 40, 20, &grid, 9, NewtonOptions::default()).unwrap();
        assert_eq!(&ext.records[..40], &base.records[..]);
        assert_eq!(ext.count(Split::Train), 30);
        assert_eq!(ext.with_train_size(10).unwrap().records, base.records);
    }

    #[test]
    fn split_rule() {
        assert_eq!(split_sizes(512), (128, 128, 256));
        assert_eq!(split_sizes(10), (2, 2, 6));
    }

    #[test]
    fn draw_whole_pool_is_permutation() {
        let grid = feeders::four_bus();
        let pool = generate_pool(&grid, 40, 0.3, 5).unwrap();
        let ds = draw_and_label(&pool, 40, &grid, 8, NewtonOptions::default()).unwrap();
        let mut got: Vec<Vec<f64>> = ds.records.iter().map(|r| r.x.clone()).collect();
        let mut want: Vec<Vec<f64>> = (0..40).map(|i| pool.features(i)).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got, want);
        assert_eq!(ds.count(Split::Train), 10);
    }

    #[test]
    fn corruption_level_zero_is_identity() {
        let grid = feeders::four_bus();
        let pool = generate_pool(&grid, 64, 0.3, 5).unwrap();
        let ds = draw_and_label(&pool, 64, &grid, 8, NewtonOptions::default()).unwrap();
        let c = corrupt(&ds, 0.0, 1).unwrap();
        assert_eq!(c.records, ds.records);
        assert!(corrupt(&ds, 1.5, 1).is_err());
    }
}
