use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Circuit, Gate, NoiseModel, SimError, MAX_MIXED_QUBITS, MAX_PURE_QUBITS};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateMode {
    Pure,
    Mixed,
}

/// Register state. Pure states hold `2^q` amplitudes; mixed states hold the
/// `2^q × 2^q` density matrix row-major, i.e. entry `(r, c)` lives at
/// `r << q | c`, so the matrix is a `2q`-bit vector whose high `q` bits index
/// rows.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    qubits: usize,
    mode: StateMode,
    data: Vec<C64>,
}

/// How expectation values are read out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Readout {
    Exact,
    Shots(u32),
}

type Mat2 = [[C64; 2]; 2];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

fn hadamard() -> Mat2 {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    [[h, h], [h, -h]]
}

fn ry(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[C64::new(c, 0.0), C64::new(-s, 0.0)], [C64::new(s, 0.0), C64::new(c, 0.0)]]
}

fn rz(theta: f64) -> Mat2 {
    let (s, c) = (theta / 2.0).sin_cos();
    [[C64::new(c, -s), ZERO], [ZERO, C64::new(c, s)]]
}

fn conj(m: &Mat2) -> Mat2 {
    [[m[0][0].conj(), m[0][1].conj()], [m[1][0].conj(), m[1][1].conj()]]
}

fn apply_1q(data: &mut [C64], bit: usize, m: &Mat2) {
    let stride = 1usize << bit;
    let len = data.len();
    let mut base = 0;
    while base < len {
        for i in base..base + stride {
            let (a, b) = (data[i], data[i + stride]);
            data[i] = m[0][0] * a + m[0][1] * b;
            data[i + stride] = m[1][0] * a + m[1][1] * b;
        }
        base += 2 * stride;
    }
}

fn apply_cnot(data: &mut [C64], control: usize, target: usize) {
    let (cm, tm) = (1usize << control, 1usize << target);
    for i in 0..data.len() {
        if i & cm != 0 && i & tm == 0 {
            data.swap(i, i | tm);
        }
    }
}

impl QuantumState {
    /// `|0…0⟩` in the requested representation.
    pub fn zero(qubits: usize, mode: StateMode) -> Result<Self, SimError> {
        let cap = match mode {
            StateMode::Pure => MAX_PURE_QUBITS,
            StateMode::Mixed => MAX_MIXED_QUBITS,
        };
        if qubits == 0 || qubits > cap {
            return Err(SimError::TooManyQubits { qubits, mode, cap });
        }
        let len = match mode {
            StateMode::Pure => 1 << qubits,
            StateMode::Mixed => 1 << (2 * qubits),
        };
        let mut data = vec![ZERO; len];
        data[0] = ONE;
        Ok(Self { qubits, mode, data })
    }

    pub fn from_amplitudes(amplitudes: Vec<C64>) -> Result<Self, SimError> {
        let qubits = amplitudes.len().trailing_zeros() as usize;
        if !amplitudes.len().is_power_of_two() || qubits == 0 || qubits > MAX_PURE_QUBITS {
            return Err(SimError::TooManyQubits { qubits, mode: StateMode::Pure, cap: MAX_PURE_QUBITS });
        }
        Ok(Self { qubits, mode: StateMode::Pure, data: amplitudes })
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    pub fn mode(&self) -> StateMode {
        self.mode
    }

    /// Amplitudes (pure) or row-major density matrix entries (mixed).
    pub fn data(&self) -> &[C64] {
        &self.data
    }

    /// Density-matrix copy of this state.
    pub fn to_mixed(&self) -> Result<Self, SimError> {
        match self.mode {
            StateMode::Mixed => Ok(self.clone()),
            StateMode::Pure => {
                if self.qubits > MAX_MIXED_QUBITS {
                    return Err(SimError::TooManyQubits {
                        qubits: self.qubits,
                        mode: StateMode::Mixed,
                        cap: MAX_MIXED_QUBITS,
                    });
                }
                let dim = self.data.len();
                let mut data = vec![ZERO; dim * dim];
                for r in 0..dim {
                    for c in 0..dim {
                        data[r * dim + c] = self.data[r] * self.data[c].conj();
                    }
                }
                Ok(Self { qubits: self.qubits, mode: StateMode::Mixed, data })
            }
        }
    }

    /// `Σ|γ_i|²` for pure states, `Tr ρ` for mixed ones.
    pub fn norm(&self) -> f64 {
        match self.mode {
            StateMode::Pure => self.data.iter().map(|a| a.norm_sqr()).sum(),
            StateMode::Mixed => self.trace().re,
        }
    }

    pub fn trace(&self) -> C64 {
        match self.mode {
            StateMode::Pure => C64::new(self.norm(), 0.0),
            StateMode::Mixed => {
                let dim = 1usize << self.qubits;
                (0..dim).map(|i| self.data[i * dim + i]).sum()
            }
        }
    }

    /// Largest `|ρ_rc − conj(ρ_cr)|`; zero for pure states.
    pub fn hermiticity_error(&self) -> f64 {
        if self.mode == StateMode::Pure {
            return 0.0;
        }
        let dim = 1usize << self.qubits;
        let mut worst = 0.0_f64;
        for r in 0..dim {
            for c in r..dim {
                worst = worst.max((self.data[r * dim + c] - self.data[c * dim + r].conj()).norm());
            }
        }
        worst
    }

    fn check_qubit(&self, q: usize) -> Result<(), SimError> {
        if q >= self.qubits {
            Err(SimError::QubitOutOfRange { index: q, qubits: self.qubits })
        } else {
            Ok(())
        }
    }

    fn apply_unitary(&mut self, q: usize, m: &Mat2) {
        match self.mode {
            StateMode::Pure => apply_1q(&mut self.data, q, m),
            StateMode::Mixed => {
                apply_1q(&mut self.data, q + self.qubits, m);
                apply_1q(&mut self.data, q, &conj(m));
            }
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        apply_cnot(&mut self.data, control, target);
        if self.mode == StateMode::Mixed {
            apply_cnot(&mut self.data, control + self.qubits, target + self.qubits);
        }
    }

    /// Applies `f(ρ00, ρ01, ρ10, ρ11)` to every 2×2 block of qubit `q`.
    fn map_blocks(&mut self, q: usize, f: impl Fn([C64; 4]) -> [C64; 4]) {
        debug_assert_eq!(self.mode, StateMode::Mixed);
        let col = 1usize << q;
        let row = 1usize << (q + self.qubits);
        for i in 0..self.data.len() {
            if i & col != 0 || i & row != 0 {
                continue;
            }
            let idx = [i, i | col, i | row, i | row | col];
            let out = f([self.data[idx[0]], self.data[idx[1]], self.data[idx[2]], self.data[idx[3]]]);
            for (k, &j) in idx.iter().enumerate() {
                self.data[j] = out[k];
            }
        }
    }

    /// Single-qubit depolarizing: with probability `p` the qubit is replaced
    /// by the maximally mixed state.
    fn depolarize(&mut self, q: usize, p: f64) {
        self.map_blocks(q, |[a, b, c, d]| {
            let mix = (a + d) * (p / 2.0);
            [a * (1.0 - p) + mix, b * (1.0 - p), c * (1.0 - p), d * (1.0 - p) + mix]
        });
    }

    /// Amplitude damping with decay probability `gamma`.
    fn amplitude_damp(&mut self, q: usize, gamma: f64) {
        let keep = (1.0 - gamma).sqrt();
        self.map_blocks(q, |[a, b, c, d]| [a + d * gamma, b * keep, c * keep, d * (1.0 - gamma)]);
    }

    /// Exact `⟨Z_q⟩` for every qubit in one pass.
    pub fn z_expectations(&self) -> Vec<f64> {
        let dim = 1usize << self.qubits;
        let mut out = vec![0.0; self.qubits];
        for i in 0..dim {
            let prob = match self.mode {
                StateMode::Pure => self.data[i].norm_sqr(),
                StateMode::Mixed => self.data[i * dim + i].re,
            };
            for (q, acc) in out.iter_mut().enumerate() {
                if i >> q & 1 == 0 {
                    *acc += prob;
                } else {
                    *acc -= prob;
                }
            }
        }
        out
    }
}

/// Applies one gate and, when `noise` is given, the post-gate channels on the
/// touched qubits. Channels need a mixed state.
pub fn apply_gate(
    state: &QuantumState,
    gate: &Gate,
    bindings: &[f64],
    noise: Option<&NoiseModel>,
) -> Result<QuantumState, SimError> {
    let mut out = state.clone();
    apply_gate_in_place(&mut out, gate, bindings, noise, 0.0)?;
    Ok(out)
}

pub(crate) fn apply_gate_in_place(
    state: &mut QuantumState,
    gate: &Gate,
    bindings: &[f64],
    noise: Option<&NoiseModel>,
    extra_angle: f64,
) -> Result<(), SimError> {
    let over_rotation = noise.map_or(0.0, |n| n.gate_imperfection);
    if let Some(n) = noise {
        if n.has_channels() && state.mode == StateMode::Pure {
            return Err(SimError::NeedsMixedState);
        }
    }
    let (qs, touched) = gate.qubits();
    for &q in &qs[..touched] {
        state.check_qubit(q)?;
    }
    match *gate {
        Gate::H(q) => state.apply_unitary(q, &hadamard()),
        Gate::Ry(q, a) => state.apply_unitary(q, &ry(a.resolve(bindings)? + over_rotation + extra_angle)),
        Gate::Rz(q, a) => state.apply_unitary(q, &rz(a.resolve(bindings)? + over_rotation + extra_angle)),
        Gate::Cnot { control, target } => {
            if control == target {
                return Err(SimError::SameControlTarget(control));
            }
            state.apply_cnot(control, target)
        }
    }
    if let Some(n) = noise.filter(|n| n.has_channels()) {
        for &q in &qs[..touched] {
            if n.depolarizing > 0.0 {
                state.depolarize(q, n.depolarizing);
            }
            if n.amplitude_damping > 0.0 {
                state.amplitude_damp(q, n.amplitude_damping);
            }
        }
    }
    Ok(())
}

/// Runs `circuit` from `|0…0⟩`. A density matrix is used only when the noise
/// model has incoherent channels.
pub fn run_circuit(circuit: &Circuit, bindings: &[f64], noise: Option<&NoiseModel>) -> Result<QuantumState, SimError> {
    run_shifted(circuit, bindings, noise, None)
}

/// As [`run_circuit`], adding `shift.1` to the angle of gate `shift.0`.
pub(crate) fn run_shifted(
    circuit: &Circuit,
    bindings: &[f64],
    noise: Option<&NoiseModel>,
    shift: Option<(usize, f64)>,
) -> Result<QuantumState, SimError> {
    if let Some(n) = noise {
        n.validate()?;
    }
    let mode = if noise.is_some_and(NoiseModel::has_channels) { StateMode::Mixed } else { StateMode::Pure };
    let mut state = QuantumState::zero(circuit.qubits(), mode)?;
    for (i, gate) in circuit.gates().iter().enumerate() {
        let extra = match shift {
            Some((g, s)) if g == i => s,
            _ => 0.0,
        };
        apply_gate_in_place(&mut state, gate, bindings, noise, extra)?;
    }
    Ok(state)
}

/// `⟨Z_qubit⟩`, including the readout flip of `noise` when given.
pub fn expectation_z(state: &QuantumState, qubit: usize, noise: Option<&NoiseModel>) -> Result<f64, SimError> {
    state.check_qubit(qubit)?;
    let exact = state.z_expectations()[qubit];
    Ok(noise.map_or(1.0, NoiseModel::readout_factor) * exact)
}

fn sample_from_exact(exact: f64, shots: u32, flip: f64, rng: &mut impl Rng) -> f64 {
    let p0 = ((1.0 + exact) / 2.0).clamp(0.0, 1.0);
    let mut balance: i64 = 0;
    for _ in 0..shots {
        let mut zero = rng.random::<f64>() < p0;
        if flip > 0.0 && rng.random::<f64>() < flip {
            zero = !zero;
        }
        balance += if zero { 1 } else { -1 };
    }
    balance as f64 / shots as f64
}

/// Shot estimate `(n_0 − n_1)/shots` of `⟨Z_qubit⟩` drawing from `rng`.
pub fn sample_shots_with(
    state: &QuantumState,
    qubit: usize,
    shots: u32,
    noise: Option<&NoiseModel>,
    rng: &mut impl Rng,
) -> Result<f64, SimError> {
    if shots == 0 {
        return Err(SimError::ZeroShots);
    }
    let exact = expectation_z(state, qubit, None)?;
    Ok(sample_from_exact(exact, shots, noise.map_or(0.0, |n| n.measurement_flip), rng))
}

/// Seeded shot estimate of `⟨Z_qubit⟩`.
pub fn sample_shots(
    state: &QuantumState,
    qubit: usize,
    shots: u32,
    seed: u64,
    noise: Option<&NoiseModel>,
) -> Result<f64, SimError> {
    sample_shots_with(state, qubit, shots, noise, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Per-qubit `⟨Z⟩` estimates for `state` under the given readout.
pub fn estimate_expectations(
    state: &QuantumState,
    readout: Readout,
    noise: Option<&NoiseModel>,
    rng: &mut impl Rng,
) -> Result<Vec<f64>, SimError> {
    let exact = state.z_expectations();
    match readout {
        Readout::Exact => {
            let f = noise.map_or(1.0, NoiseModel::readout_factor);
            Ok(exact.into_iter().map(|z| f * z).collect())
        }
        Readout::Shots(0) => Err(SimError::ZeroShots),
        Readout::Shots(shots) => {
            let flip = noise.map_or(0.0, |n| n.measurement_flip);
            Ok(exact.into_iter().map(|z| sample_from_exact(z, shots, flip, rng)).collect())
        }
    }
}
