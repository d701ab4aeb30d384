//! Power system representation and Newton-Raphson ground truth.
//!
//! A [`GridCase`] holds a dense bus admittance matrix split into its real
//! (`g`) and imaginary (`b`) parts, the per-bus load demand and the slack
//! designation. Bus loads are stored with the *demand* sign convention
//! (positive `p`, `q` consume power); the net injection used by the
//! power-flow equations is the negated demand.
//!
//! Angles are radians inside this module and degrees wherever they leave it
//! ([`PowerFlowSolution::delta_deg`], grid files, datasets).

mod file;
mod newton;

pub use file::{parse_grid_file, read_grid_file, BusKind, BusRecord, GridSpec, LineRecord};
pub use newton::{mismatch_jacobian, solve_newton_raphson, NewtonOptions, PowerFlowSolution};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("grid needs at least two buses, got {0}")]
    TooFewBuses(usize),
    #[error("duplicate bus id {0}")]
    DuplicateBus(u32),
    #[error("line {from}-{to} references unknown bus {missing}")]
    UnknownBus { from: u32, to: u32, missing: u32 },
    #[error("line {from}-{to} has zero impedance")]
    ZeroImpedance { from: u32, to: u32 },
    #[error("line {0}-{0} connects a bus to itself")]
    SelfLoop(u32),
    #[error("grid has no lines")]
    NoLines,
    #[error("expected exactly one slack bus, found {0}")]
    SlackCount(usize),
    #[error("bus {0} has a non-finite load")]
    NonFiniteLoad(u32),
    #[error("state has {got} entries, grid has {expected} buses")]
    Dimension { expected: usize, got: usize },
    #[error("grid file: {0}")]
    Parse(String),
    #[error("grid file {path}: {message}")]
    Io { path: String, message: String },
}

/// Network data for one power-flow case.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCase {
    name: String,
    bus_ids: Vec<u32>,
    slack: usize,
    pq: Vec<usize>,
    load_p: Vec<f64>,
    load_q: Vec<f64>,
    g: Vec<f64>,
    b: Vec<f64>,
    v_slack: f64,
    delta_slack_deg: f64,
}

/// Assembles the Y-bus for `spec`: `y_ij = -1/z_ij` off the diagonal and the
/// sum of incident line admittances on it.
pub fn build_grid(spec: &GridSpec) -> Result<GridCase, GridError> {
    let n = spec.bus.len();
    if n < 2 {
        return Err(GridError::TooFewBuses(n));
    }
    let mut bus_ids = Vec::with_capacity(n);
    for bus in &spec.bus {
        if bus_ids.contains(&bus.id) {
            return Err(GridError::DuplicateBus(bus.id));
        }
        if !bus.p.is_finite() || !bus.q.is_finite() {
            return Err(GridError::NonFiniteLoad(bus.id));
        }
        bus_ids.push(bus.id);
    }
    let slacks: Vec<usize> =
        spec.bus.iter().enumerate().filter(|(_, b)| b.kind == BusKind::Slack).map(|(i, _)| i).collect();
    if slacks.len() != 1 {
        return Err(GridError::SlackCount(slacks.len()));
    }
    if spec.line.is_empty() {
        return Err(GridError::NoLines);
    }

    let index_of = |id: u32| bus_ids.iter().position(|&b| b == id);
    let mut g = vec![0.0; n * n];
    let mut b = vec![0.0; n * n];
    for line in &spec.line {
        let (from, to) = (line.from, line.to);
        let i = index_of(from).ok_or(GridError::UnknownBus { from, to, missing: from })?;
        let j = index_of(to).ok_or(GridError::UnknownBus { from, to, missing: to })?;
        if i == j {
            return Err(GridError::SelfLoop(from));
        }
        let z2 = line.r * line.r + line.x * line.x;
        if z2 == 0.0 || !z2.is_finite() {
            return Err(GridError::ZeroImpedance { from, to });
        }
        // y = 1 / (r + jx) = (r - jx) / |z|^2
        let (gy, by) = (line.r / z2, -line.x / z2);
        g[i * n + i] += gy;
        b[i * n + i] += by;
        g[j * n + j] += gy;
        b[j * n + j] += by;
        g[i * n + j] -= gy;
        b[i * n + j] -= by;
        g[j * n + i] -= gy;
        b[j * n + i] -= by;
    }

    let slack = slacks[0];
    Ok(GridCase {
        name: spec.name.clone().unwrap_or_default(),
        pq: (0..n).filter(|&i| i != slack).collect(),
        bus_ids,
        slack,
        load_p: spec.bus.iter().map(|b| b.p).collect(),
        load_q: spec.bus.iter().map(|b| b.q).collect(),
        g,
        b,
        v_slack: spec.v_slack,
        delta_slack_deg: spec.delta_slack_deg,
    })
}

impl GridCase {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_buses(&self) -> usize {
        self.bus_ids.len()
    }

    pub fn bus_ids(&self) -> &[u32] {
        &self.bus_ids
    }

    pub fn slack_index(&self) -> usize {
        self.slack
    }

    /// Indices of the PQ buses in bus order.
    pub fn pq_buses(&self) -> &[usize] {
        &self.pq
    }

    pub fn n_pq(&self) -> usize {
        self.pq.len()
    }

    pub fn v_slack(&self) -> f64 {
        self.v_slack
    }

    pub fn delta_slack_deg(&self) -> f64 {
        self.delta_slack_deg
    }

    /// Conductance `g_ij`.
    pub fn g(&self, i: usize, j: usize) -> f64 {
        self.g[i * self.n_buses() + j]
    }

    /// Susceptance `b_ij`.
    pub fn b(&self, i: usize, j: usize) -> f64 {
        self.b[i * self.n_buses() + j]
    }

    /// Per-bus active demand (pu).
    pub fn load_p(&self) -> &[f64] {
        &self.load_p
    }

    /// Per-bus reactive demand (pu).
    pub fn load_q(&self) -> &[f64] {
        &self.load_q
    }

    /// Specified net injections `(p_i, q_i)` for bus `i`.
    pub fn injection(&self, i: usize) -> (f64, f64) {
        (-self.load_p[i], -self.load_q[i])
    }

    /// PQ-bus demands as `(p, q)` vectors in PQ order.
    pub fn pq_loads(&self) -> (Vec<f64>, Vec<f64>) {
        (self.pq.iter().map(|&i| self.load_p[i]).collect(), self.pq.iter().map(|&i| self.load_q[i]).collect())
    }

    /// Copy of this grid with the PQ-bus demands replaced.
    pub fn with_pq_loads(&self, p: &[f64], q: &[f64]) -> Result<GridCase, GridError> {
        let m = self.n_pq();
        if p.len() != m || q.len() != m {
            return Err(GridError::Dimension { expected: m, got: p.len().min(q.len()) });
        }
        let mut out = self.clone();
        for (k, &bus) in self.pq.iter().enumerate() {
            out.load_p[bus] = p[k];
            out.load_q[bus] = q[k];
        }
        Ok(out)
    }

    /// Active and reactive power computed from the voltage state for every bus.
    pub fn injections_at(&self, v: &[f64], delta: &[f64]) -> Result<(Vec<f64>, Vec<f64>), GridError> {
        let n = self.n_buses();
        for len in [v.len(), delta.len()] {
            if len != n {
                return Err(GridError::Dimension { expected: n, got: len });
            }
        }
        let mut p = vec![0.0; n];
        let mut q = vec![0.0; n];
        for i in 0..n {
            let (mut pi, mut qi) = (0.0, 0.0);
            for j in 0..n {
                let (gij, bij) = (self.g(i, j), self.b(i, j));
                if gij == 0.0 && bij == 0.0 {
                    continue;
                }
                let (s, c) = (delta[i] - delta[j]).sin_cos();
                pi += v[j] * (gij * c + bij * s);
                qi += v[j] * (gij * s - bij * c);
            }
            p[i] = v[i] * pi;
            q[i] = v[i] * qi;
        }
        Ok((p, q))
    }
}

/// Power mismatch `[Δp; Δq]` over the PQ buses (slack excluded), with
/// `Δ = specified − computed`. `delta` is in radians.
pub fn pf_mismatch(grid: &GridCase, v: &[f64], delta: &[f64]) -> Result<Vec<f64>, GridError> {
    let (p, q) = grid.injections_at(v, delta)?;
    let m = grid.n_pq();
    let mut out = vec![0.0; 2 * m];
    for (k, &i) in grid.pq_buses().iter().enumerate() {
        let (ps, qs) = grid.injection(i);
        out[k] = ps - p[i];
        out[m + k] = qs - q[i];
    }
    Ok(out)
}

/// Shipped test feeders.
pub mod feeders {
    use super::{build_grid, parse_grid_file, GridCase};

    pub const FOUR_BUS: &str = include_str!("../../../../data/feeder4.toml");
    pub const THIRTY_THREE_BUS: &str = include_str!("../../../../data/feeder33.toml");

    pub fn four_bus() -> GridCase {
        build_grid(&parse_grid_file(FOUR_BUS).expect("shipped 4-bus feeder parses"))
            .expect("shipped 4-bus feeder is valid")
    }

    pub fn thirty_three_bus() -> GridCase {
        build_grid(&parse_grid_file(THIRTY_THREE_BUS).expect("shipped 33-bus feeder parses"))
            .expect("shipped 33-bus feeder is valid")
    }
}
