use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{pf_mismatch, GridCase, GridError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 50 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerFlowSolution {
    /// Voltage magnitude per bus, pu.
    pub v: Vec<f64>,
    /// Phase angle per bus, degrees.
    pub delta_deg: Vec<f64>,
    pub iterations: usize,
    /// Infinity norm of the PQ-bus mismatch at the returned state.
    pub final_residual_norm: f64,
    pub converged: bool,
}

impl PowerFlowSolution {
    pub fn delta_rad(&self) -> Vec<f64> {
        self.delta_deg.iter().map(|d| d.to_radians()).collect()
    }
}

/// Jacobian of [`pf_mismatch`] with respect to the PQ unknowns ordered as
/// `[δ_pq; v_pq]`. Rows follow the mismatch ordering `[Δp; Δq]`.
pub fn mismatch_jacobian(grid: &GridCase, v: &[f64], delta: &[f64]) -> Result<DMatrix<f64>, GridError> {
    let (p, q) = grid.injections_at(v, delta)?;
    let pq = grid.pq_buses();
    let m = pq.len();
    // Derivatives of the computed injections; the mismatch is their negation.
    let mut jac = DMatrix::zeros(2 * m, 2 * m);
    for (r, &i) in pq.iter().enumerate() {
        for (c, &j) in pq.iter().enumerate() {
            let (dp_dd, dp_dv, dq_dd, dq_dv) = if i == j {
                let (gii, bii) = (grid.g(i, i), grid.b(i, i));
                (
                    -q[i] - bii * v[i] * v[i],
                    p[i] / v[i] + gii * v[i],
                    p[i] - gii * v[i] * v[i],
                    q[i] / v[i] - bii * v[i],
                )
            } else {
                let (gij, bij) = (grid.g(i, j), grid.b(i, j));
                let (s, co) = (delta[i] - delta[j]).sin_cos();
                let a = gij * co + bij * s;
                let bb = gij * s - bij * co;
                (v[i] * v[j] * bb, v[i] * a, -v[i] * v[j] * a, v[i] * bb)
            };
            jac[(r, c)] = -dp_dd;
            jac[(r, m + c)] = -dp_dv;
            jac[(m + r, c)] = -dq_dd;
            jac[(m + r, m + c)] = -dq_dv;
        }
    }
    Ok(jac)
}

fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0_f64, |acc, v| if v.is_nan() { f64::NAN } else { acc.max(v.abs()) })
}

/// Newton-Raphson from a flat start. Never panics on singular Jacobians or
/// divergence; returns `converged = false` with the best iterate instead.
pub fn solve_newton_raphson(grid: &GridCase, opts: NewtonOptions) -> Result<PowerFlowSolution, GridError> {
    assert!(opts.tol > 0.0, "tolerance must be positive");
    assert!(opts.max_iter >= 1, "max_iter must be at least 1");

    let n = grid.n_buses();
    let pq = grid.pq_buses();
    let m = pq.len();
    let slack = grid.slack_index();
    let mut v = vec![1.0; n];
    let mut delta = vec![0.0; n];
    v[slack] = grid.v_slack();
    delta[slack] = grid.delta_slack_deg().to_radians();

    let mut best: Option<(f64, Vec<f64>, Vec<f64>, usize)> = None;
    let mut converged = false;
    let mut iterations = 0;
    for iter in 0..=opts.max_iter {
        let f = pf_mismatch(grid, &v, &delta)?;
        let norm = inf_norm(&f);
        if !norm.is_finite() {
            break;
        }
        if best.as_ref().is_none_or(|b| norm < b.0) {
            best = Some((norm, v.clone(), delta.clone(), iter));
        }
        iterations = iter;
        if norm <= opts.tol {
            converged = true;
            break;
        }
        if iter == opts.max_iter {
            break;
        }
        let jac = mismatch_jacobian(grid, &v, &delta)?;
        let Some(step) = jac.lu().solve(&DVector::from_column_slice(&f)) else {
            log::debug!("singular Jacobian at iteration {iter}");
            break;
        };
        if step.iter().any(|s| !s.is_finite()) {
            break;
        }
        for (k, &bus) in pq.iter().enumerate() {
            delta[bus] -= step[k];
            v[bus] -= step[m + k];
        }
    }

    let (norm, v, delta, _) = best.unwrap_or((f64::INFINITY, v, delta, 0));
    let mut delta_deg: Vec<f64> = delta.iter().map(|d| d.to_degrees()).collect();
    delta_deg[slack] = grid.delta_slack_deg();
    Ok(PowerFlowSolution { v, delta_deg, iterations, final_residual_norm: norm, converged })
}
