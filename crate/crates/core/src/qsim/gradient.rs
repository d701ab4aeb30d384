//! Parameter-shift derivatives.
//!
//! Every parameterized gate here is `exp(-iθP/2)` for a Pauli `P`, so
//! `∂⟨Z⟩/∂θ = ½[⟨Z⟩(θ + π/2) − ⟨Z⟩(θ − π/2)]` exactly. A parameter bound to
//! several gates gets the sum of the per-gate shift terms. The rule stays
//! exact under the noise model because its channels do not depend on θ.

use std::f64::consts::FRAC_PI_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::state::{estimate_expectations, run_shifted};
use super::{Circuit, NoiseModel, Readout, SimError};

/// Derivatives of every qubit's `⟨Z⟩` with respect to each parameter in
/// `params`. Row `r` belongs to `params[r]`; columns are qubits. Each shifted
/// circuit is evaluated once and read out on all qubits.
pub fn parameter_shift_jacobian(
    circuit: &Circuit,
    bindings: &[f64],
    params: &[usize],
    noise: Option<&NoiseModel>,
    readout: Readout,
    rng: &mut impl Rng,
) -> Result<Vec<Vec<f64>>, SimError> {
    let mut rows = Vec::with_capacity(params.len());
    for &k in params {
        if k >= bindings.len() {
            return Err(SimError::UnboundParameter(k));
        }
        let mut row = vec![0.0; circuit.qubits()];
        for (g, gate) in circuit.gates().iter().enumerate() {
            if gate.param() != Some(k) {
                continue;
            }
            let plus = run_shifted(circuit, bindings, noise, Some((g, FRAC_PI_2)))?;
            let plus = estimate_expectations(&plus, readout, noise, rng)?;
            let minus = run_shifted(circuit, bindings, noise, Some((g, -FRAC_PI_2)))?;
            let minus = estimate_expectations(&minus, readout, noise, rng)?;
            for (acc, (p, m)) in row.iter_mut().zip(plus.iter().zip(&minus)) {
                *acc += 0.5 * (p - m);
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Exact gradient of `⟨Z_observable⟩` with respect to all circuit parameters.
pub fn parameter_shift_grad(
    circuit: &Circuit,
    bindings: &[f64],
    observable: usize,
    noise: Option<&NoiseModel>,
) -> Result<Vec<f64>, SimError> {
    if observable >= circuit.qubits() {
        return Err(SimError::QubitOutOfRange { index: observable, qubits: circuit.qubits() });
    }
    let params: Vec<usize> = (0..circuit.n_params()).collect();
    // Exact readout never draws from the generator.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let jac = parameter_shift_jacobian(circuit, bindings, &params, noise, Readout::Exact, &mut rng)?;
    Ok(jac.into_iter().map(|row| row[observable]).collect())
}

#[cfg(test)]
mod tests {
    use super::super::{Angle, Gate};
    use super::*;

    #[test]
    fn single_ry_matches_cosine_derivative() {
        let mut c = Circuit::new(1);
        c.push(Gate::Ry(0, Angle::Param(0))).unwrap();
        let g0 = parameter_shift_grad(&c, &[0.0], 0, None).unwrap();
        assert!(g0[0].abs() < 1e-15);
        let g1 = parameter_shift_grad(&c, &[FRAC_PI_2], 0, None).unwrap();
        assert!((g1[0] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn unparameterized_circuit_has_empty_gradient() {
        let mut c = Circuit::new(2);
        c.push(Gate::H(0)).unwrap().push(Gate::Cnot { control: 0, target: 1 }).unwrap();
        assert!(parameter_shift_grad(&c, &[], 1, None).unwrap().is_empty());
    }

    #[test]
    fn shared_parameter_sums_terms() {
        // Ry(θ)Ry(θ)|0⟩ = Ry(2θ)|0⟩, so d⟨Z⟩/dθ = -2 sin 2θ.
        let mut c = Circuit::new(1);
        c.push(Gate::Ry(0, Angle::Param(0))).unwrap().push(Gate::Ry(0, Angle::Param(0))).unwrap();
        let theta = 0.3;
        let g = parameter_shift_grad(&c, &[theta], 0, None).unwrap();
        assert!((g[0] + 2.0 * (2.0 * theta).sin()).abs() < 1e-14);
    }
}
