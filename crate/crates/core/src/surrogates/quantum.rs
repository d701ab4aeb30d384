use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SurrogateError;
use crate::qsim::{
    estimate_expectations, parameter_shift_jacobian, run_circuit, Angle, Circuit, Gate, NoiseModel, Readout,
};

/// Voltage magnitude interval centre and half-width, pu.
pub const V_CENTER: f64 = 1.0;
pub const V_HALF_WIDTH: f64 = 0.15;
/// Voltage angle half-width, degrees.
pub const DELTA_HALF_WIDTH: f64 = 8.0;

/// Maps a value in `[-1, 1]` onto the voltage interval `[0.85, 1.15]`.
pub fn to_voltage(z: f64) -> f64 {
    V_CENTER + V_HALF_WIDTH * z
}

/// Maps a value in `[-1, 1]` onto the angle interval `[-8°, 8°]`.
pub fn to_angle(z: f64) -> f64 {
    DELTA_HALF_WIDTH * z
}

/// CNOT pattern between the two rotation layers of the ansatz.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entangler {
    /// Qubit `i` controls `i + 1`.
    #[default]
    Chain,
    /// Every ordered pair `i < j`, `i` controlling `j`.
    Full,
}

/// Feature map: a Hadamard on every qubit, then `Rz(atan x_i)` on qubit `i`.
pub fn encode_features(x: &[f64]) -> Result<Vec<Gate>, SurrogateError> {
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(SurrogateError::NonFinite(format!("feature {i} is {}", x[i])));
    }
    let mut gates: Vec<Gate> = (0..x.len()).map(Gate::H).collect();
    gates.extend(x.iter().enumerate().map(|(i, v)| Gate::Rz(i, Angle::Fixed(v.atan()))));
    Ok(gates)
}

/// Ry layer, entangler, Ry layer; parameters `first..first + 2·qubits`.
pub fn ansatz_gates(qubits: usize, entangler: Entangler, first: usize) -> Vec<Gate> {
    let mut gates: Vec<Gate> = (0..qubits).map(|i| Gate::Ry(i, Angle::Param(first + i))).collect();
    match entangler {
        Entangler::Chain => {
            gates.extend((1..qubits).map(|t| Gate::Cnot { control: t - 1, target: t }));
        }
        Entangler::Full => {
            for c in 0..qubits {
                gates.extend((c + 1..qubits).map(|t| Gate::Cnot { control: c, target: t }));
            }
        }
    }
    gates.extend((0..qubits).map(|i| Gate::Ry(i, Angle::Param(first + qubits + i))));
    gates
}

/// Pure quantum surrogate for a grid with `qubits / 2` PQ buses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QnnSpec {
    pub qubits: usize,
    pub entangler: Entangler,
}

impl QnnSpec {
    /// One qubit per input feature.
    pub fn for_buses(n_pq: usize) -> Self {
        Self { qubits: 2 * n_pq, entangler: Entangler::Chain }
    }

    pub fn n_params(&self) -> usize {
        2 * self.qubits
    }
}

/// Circuit evaluations issued by a model, split by purpose.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallCounts {
    pub forward: u64,
    pub gradient: u64,
}

/// Readout settings plus the generator that shot sampling draws from.
#[derive(Debug, Clone)]
pub struct Executor {
    pub readout: Readout,
    pub noise: Option<NoiseModel>,
    pub calls: CallCounts,
    rng: ChaCha8Rng,
}

impl Executor {
    pub fn new(readout: Readout, noise: Option<NoiseModel>, seed: u64) -> Self {
        Self::with_rng(readout, noise, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn with_rng(readout: Readout, noise: Option<NoiseModel>, rng: ChaCha8Rng) -> Self {
        Self { readout, noise, calls: CallCounts::default(), rng }
    }

    pub fn exact() -> Self {
        Self::new(Readout::Exact, None, 0)
    }
}

/// Row-major Jacobian: one row per differentiated angle, one column per qubit.
pub type Jacobian = Vec<Vec<f64>>;

/// Feature map plus ansatz as one circuit. Parameters `0..q` are the encoded
/// input angles, `q..3q` the trainable ansatz angles.
#[derive(Debug, Clone)]
pub struct QuantumLayer {
    spec: QnnSpec,
    circuit: Circuit,
}

impl QuantumLayer {
    pub fn new(spec: QnnSpec) -> Result<Self, SurrogateError> {
        if spec.qubits == 0 {
            return Err(SurrogateError::Spec("quantum layer needs at least one qubit".into()));
        }
        let q = spec.qubits;
        let mut circuit = Circuit::new(q);
        circuit.extend((0..q).map(Gate::H))?;
        circuit.extend((0..q).map(|i| Gate::Rz(i, Angle::Param(i))))?;
        circuit.extend(ansatz_gates(q, spec.entangler, q))?;
        Ok(Self { spec, circuit })
    }

    pub fn spec(&self) -> QnnSpec {
        self.spec
    }

    pub fn qubits(&self) -> usize {
        self.spec.qubits
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    fn bindings(&self, angles: &[f64], weights: &[f64]) -> Result<Vec<f64>, SurrogateError> {
        let q = self.spec.qubits;
        if angles.len() != q || weights.len() != 2 * q {
            return Err(SurrogateError::Dimension { expected: 3 * q, got: angles.len() + weights.len() });
        }
        Ok(angles.iter().chain(weights).copied().collect())
    }

    /// Per-qubit `⟨Z⟩` for the given input angles and ansatz weights.
    pub fn expectations(
        &self,
        angles: &[f64],
        weights: &[f64],
        exec: &mut Executor,
    ) -> Result<Vec<f64>, SurrogateError> {
        let bindings = self.bindings(angles, weights)?;
        let state = run_circuit(&self.circuit, &bindings, exec.noise.as_ref())?;
        exec.calls.forward += 1;
        Ok(estimate_expectations(&state, exec.readout, exec.noise.as_ref(), &mut exec.rng)?)
    }

    /// Parameter-shift Jacobians of the `⟨Z⟩` vector: rows per ansatz weight,
    /// and rows per input angle when `with_inputs` is set.
    pub fn jacobians(
        &self,
        angles: &[f64],
        weights: &[f64],
        with_inputs: bool,
        exec: &mut Executor,
    ) -> Result<(Jacobian, Option<Jacobian>), SurrogateError> {
        let q = self.spec.qubits;
        let bindings = self.bindings(angles, weights)?;
        let noise = exec.noise.as_ref();
        let weight_params: Vec<usize> = (q..3 * q).collect();
        let dw =
            parameter_shift_jacobian(&self.circuit, &bindings, &weight_params, noise, exec.readout, &mut exec.rng)?;
        exec.calls.gradient += 2 * weight_params.len() as u64;
        let dx = if with_inputs {
            let input_params: Vec<usize> = (0..q).collect();
            let rows =
                parameter_shift_jacobian(&self.circuit, &bindings, &input_params, noise, exec.readout, &mut exec.rng)?;
            exec.calls.gradient += 2 * q as u64;
            Some(rows)
        } else {
            None
        };
        Ok((dw, dx))
    }
}
