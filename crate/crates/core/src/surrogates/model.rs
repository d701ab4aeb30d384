use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::quantum::{to_angle, to_voltage, Executor, QnnSpec, QuantumLayer};
use super::SurrogateError;
use crate::neural::{Checkpoint, CheckpointBlock, ForwardTrace, MlpParams, MlpSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lr,
    Nn,
    Qnn,
    Qcnn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Lr, ModelKind::Nn, ModelKind::Qnn, ModelKind::Qcnn];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lr => "lr",
            ModelKind::Nn => "nn",
            ModelKind::Qnn => "qnn",
            ModelKind::Qcnn => "qcnn",
        }
    }

    pub fn is_quantum(self) -> bool {
        matches!(self, ModelKind::Qnn | ModelKind::Qcnn)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = SurrogateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| SurrogateError::Spec(format!("unknown model {s:?}")))
    }
}

/// Per-feature standardization fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Scaler {
    pub fn identity(width: usize) -> Self {
        Self { mean: vec![0.0; width], std: vec![1.0; width] }
    }

    /// Population mean and deviation per column; constant columns keep unit scale.
    pub fn fit(xs: &[Vec<f64>]) -> Result<Self, SurrogateError> {
        let first = xs.first().ok_or(SurrogateError::EmptySplit("train"))?;
        let n = xs.len() as f64;
        let width = first.len();
        let mut mean = vec![0.0; width];
        for x in xs {
            for (m, v) in mean.iter_mut().zip(x) {
                *m += v / n;
            }
        }
        let mut std = vec![0.0; width];
        for x in xs {
            for ((s, v), m) in std.iter_mut().zip(x).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        for s in std.iter_mut() {
            *s = if *s > 1e-24 { s.sqrt() } else { 1.0 };
        }
        Ok(Self { mean, std })
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.mean).zip(&self.std).map(|((v, m), s)| (v - m) / s).collect()
    }
}

/// Hybrid network: classical encoder, quantum layer, classical decoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcnnSpec {
    pub encoder: MlpSpec,
    pub quantum: QnnSpec,
    pub decoder: MlpSpec,
}

impl QcnnSpec {
    /// Splits the `before + after` hidden layers of the deep baseline around
    /// a `qubits`-wide quantum layer. The encoder ends in an affine
    /// `qubits`-wide layer; the decoder starts with a `2·pq`-wide layer.
    pub fn standard(
        n_pq: usize,
        qubits: usize,
        before: usize,
        after: usize,
        dropout: f64,
    ) -> Result<Self, SurrogateError> {
        if before == 0 || after == 0 {
            return Err(SurrogateError::Spec("the quantum layer needs at least one hidden layer on each side".into()));
        }
        let w = 2 * n_pq;
        let mut enc = vec![w];
        if before > 1 {
            enc.push(w);
            enc.extend(std::iter::repeat_n(2 * w, before - 2));
        }
        enc.push(qubits);
        let mut dec = vec![qubits, w];
        if after > 1 {
            dec.extend(std::iter::repeat_n(2 * w, after - 2));
            dec.push(w);
        }
        dec.push(w);
        let encoder = if enc.len() == 2 {
            MlpSpec::linear(enc[0], enc[1])?.with_dropout(dropout)?
        } else {
            MlpSpec::new(enc, dropout)?
        };
        let decoder = MlpSpec::new(dec, dropout)?;
        let spec = Self { encoder, quantum: QnnSpec { qubits, entangler: Default::default() }, decoder };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), SurrogateError> {
        let q = self.quantum.qubits;
        if self.encoder.output_width() != q || self.decoder.input_width() != q {
            return Err(SurrogateError::Spec(format!(
                "encoder emits {} and decoder takes {} values for a {q}-qubit layer",
                self.encoder.output_width(),
                self.decoder.input_width()
            )));
        }
        if !self.decoder.output_width().is_multiple_of(2) {
            return Err(SurrogateError::Spec("decoder output must hold (v, δ) pairs".into()));
        }
        Ok(())
    }

    /// Classical hidden layers in total, counting the encoder's qubit-wide output.
    pub fn hidden_layers(&self) -> usize {
        self.encoder.hidden_layers() + 1 + self.decoder.hidden_layers()
    }

    fn n_params(&self) -> usize {
        self.encoder.n_params() + self.quantum.n_params() + self.decoder.n_params()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Architecture {
    Mlp { spec: MlpSpec },
    Qnn { spec: QnnSpec },
    Qcnn { spec: QcnnSpec },
}

impl Architecture {
    pub fn n_params(&self) -> usize {
        match self {
            Architecture::Mlp { spec } => spec.n_params(),
            Architecture::Qnn { spec } => spec.n_params(),
            Architecture::Qcnn { spec } => spec.n_params(),
        }
    }

    pub fn input_width(&self) -> usize {
        match self {
            Architecture::Mlp { spec } => spec.input_width(),
            Architecture::Qnn { spec } => spec.qubits,
            Architecture::Qcnn { spec } => spec.encoder.input_width(),
        }
    }

    pub fn output_width(&self) -> usize {
        match self {
            Architecture::Mlp { spec } => spec.output_width(),
            Architecture::Qnn { spec } => spec.qubits,
            Architecture::Qcnn { spec } => spec.decoder.output_width(),
        }
    }
}

/// QNN readout: qubit `2i` gives `v_i`, qubit `2i+1` gives `δ_i`; the
/// output is ordered `(v_1..v_m, δ_1..δ_m)`.
fn qnn_post(z: &[f64]) -> Vec<f64> {
    let m = z.len() / 2;
    let mut y = vec![0.0; 2 * m];
    for i in 0..m {
        y[i] = to_voltage(z[2 * i]);
        y[m + i] = to_angle(z[2 * i + 1]);
    }
    y
}

/// Decoder head: `tanh` squashes each output before the interval map.
fn qcnn_post(u: &[f64]) -> Vec<f64> {
    let m = u.len() / 2;
    u.iter().enumerate().map(|(i, v)| if i < m { to_voltage(v.tanh()) } else { to_angle(v.tanh()) }).collect()
}

/// A trained or trainable surrogate: architecture, input scaler and one
/// flat parameter vector. QCNN parameters are laid out encoder, ansatz, decoder.
#[derive(Debug, Clone)]
pub struct Surrogate {
    kind: ModelKind,
    arch: Architecture,
    scaler: Scaler,
    params: Vec<f64>,
    layer: Option<QuantumLayer>,
}

impl Surrogate {
    /// Random initialization: network blocks uniform in `±1/√fan_in`,
    /// ansatz angles uniform in `[-1, 1]`.
    pub fn init(
        kind: ModelKind,
        arch: Architecture,
        scaler: Scaler,
        rng: &mut impl Rng,
    ) -> Result<Self, SurrogateError> {
        let params = match &arch {
            Architecture::Mlp { spec } => MlpParams::init(spec, rng).values,
            Architecture::Qnn { spec } => (0..spec.n_params()).map(|_| rng.random_range(-1.0..1.0)).collect(),
            Architecture::Qcnn { spec } => {
                let mut p = MlpParams::init(&spec.encoder, rng).values;
                p.extend((0..spec.quantum.n_params()).map(|_| rng.random_range(-1.0..1.0)));
                p.extend(MlpParams::init(&spec.decoder, rng).values);
                p
            }
        };
        Self::from_params(kind, arch, scaler, params)
    }

    pub fn from_params(
        kind: ModelKind,
        arch: Architecture,
        scaler: Scaler,
        params: Vec<f64>,
    ) -> Result<Self, SurrogateError> {
        match (&arch, kind) {
            (Architecture::Mlp { .. }, ModelKind::Lr | ModelKind::Nn)
            | (Architecture::Qnn { .. }, ModelKind::Qnn)
            | (Architecture::Qcnn { .. }, ModelKind::Qcnn) => {}
            _ => return Err(SurrogateError::Spec(format!("architecture does not fit model kind {kind}"))),
        }
        if params.len() != arch.n_params() {
            return Err(SurrogateError::Dimension { expected: arch.n_params(), got: params.len() });
        }
        if scaler.mean.len() != arch.input_width() || scaler.std.len() != arch.input_width() {
            return Err(SurrogateError::Dimension { expected: arch.input_width(), got: scaler.mean.len() });
        }
        let layer = match &arch {
            Architecture::Mlp { .. } => None,
            Architecture::Qnn { spec } => {
                if spec.qubits % 2 != 0 {
                    return Err(SurrogateError::Spec("QNN needs an even qubit count".into()));
                }
                Some(QuantumLayer::new(*spec)?)
            }
            Architecture::Qcnn { spec } => {
                spec.validate()?;
                Some(QuantumLayer::new(spec.quantum)?)
            }
        };
        Ok(Self { kind, arch, scaler, params, layer })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn architecture(&self) -> &Architecture {
        &self.arch
    }

    pub fn scaler(&self) -> &Scaler {
        &self.scaler
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    fn check_input(&self, x: &[f64]) -> Result<Vec<f64>, SurrogateError> {
        if x.len() != self.arch.input_width() {
            return Err(SurrogateError::Dimension { expected: self.arch.input_width(), got: x.len() });
        }
        Ok(self.scaler.apply(x))
    }

    fn layer(&self) -> &QuantumLayer {
        self.layer.as_ref().expect("quantum architectures carry a layer")
    }

    /// Prediction `(v̂_1..v̂_m, δ̂_1..δ̂_m)` in physical units, dropout off.
    pub fn predict(&self, x: &[f64], exec: &mut Executor) -> Result<Vec<f64>, SurrogateError> {
        let xs = self.check_input(x)?;
        match &self.arch {
            Architecture::Mlp { spec } => Ok(ForwardTrace::run(spec, &self.params, &xs, None)?.output().to_vec()),
            Architecture::Qnn { .. } => {
                let angles: Vec<f64> = xs.iter().map(|v| v.atan()).collect();
                Ok(qnn_post(&self.layer().expectations(&angles, &self.params, exec)?))
            }
            Architecture::Qcnn { spec } => {
                let (ne, nq) = (spec.encoder.n_params(), spec.quantum.n_params());
                let z = ForwardTrace::run(&spec.encoder, &self.params[..ne], &xs, None)?;
                let angles: Vec<f64> = z.output().iter().map(|v| v.atan()).collect();
                let e = self.layer().expectations(&angles, &self.params[ne..ne + nq], exec)?;
                let u = ForwardTrace::run(&spec.decoder, &self.params[ne + nq..], &e, None)?;
                Ok(qcnn_post(u.output()))
            }
        }
    }

    /// Adds `weight · ∂L/∂params` for the record loss `L = Σ_c (ŷ_c − y_c)²`
    /// to `grads` and returns `L`. Dropout masks come from `dropout_rng`.
    pub fn accumulate_gradient(
        &self,
        x: &[f64],
        y: &[f64],
        weight: f64,
        grads: &mut [f64],
        exec: &mut Executor,
        dropout_rng: Option<&mut dyn RngCore>,
    ) -> Result<f64, SurrogateError> {
        let xs = self.check_input(x)?;
        if y.len() != self.arch.output_width() {
            return Err(SurrogateError::Dimension { expected: self.arch.output_width(), got: y.len() });
        }
        if grads.len() != self.params.len() {
            return Err(SurrogateError::Dimension { expected: self.params.len(), got: grads.len() });
        }
        match &self.arch {
            Architecture::Mlp { spec } => {
                let trace = ForwardTrace::run(spec, &self.params, &xs, dropout_rng)?;
                let (loss, dy) = loss_grad(trace.output(), y, weight);
                trace.backward(spec, &self.params, &dy, grads);
                Ok(loss)
            }
            Architecture::Qnn { .. } => {
                let layer = self.layer();
                let angles: Vec<f64> = xs.iter().map(|v| v.atan()).collect();
                let z = layer.expectations(&angles, &self.params, exec)?;
                let (loss, dy) = loss_grad(&qnn_post(&z), y, weight);
                let m = z.len() / 2;
                let mut dz = vec![0.0; z.len()];
                for i in 0..m {
                    dz[2 * i] = dy[i] * super::quantum::V_HALF_WIDTH;
                    dz[2 * i + 1] = dy[m + i] * super::quantum::DELTA_HALF_WIDTH;
                }
                let (dw, _) = layer.jacobians(&angles, &self.params, false, exec)?;
                for (g, row) in grads.iter_mut().zip(&dw) {
                    *g += dot(row, &dz);
                }
                Ok(loss)
            }
            Architecture::Qcnn { spec } => {
                let layer = self.layer();
                let (ne, nq) = (spec.encoder.n_params(), spec.quantum.n_params());
                let (enc_p, rest) = self.params.split_at(ne);
                let (w, dec_p) = rest.split_at(nq);
                let mut rng = dropout_rng;
                let enc =
                    ForwardTrace::run(&spec.encoder, enc_p, &xs, rng.as_mut().map(|r| &mut **r as &mut dyn RngCore))?;
                let z = enc.output();
                let angles: Vec<f64> = z.iter().map(|v| v.atan()).collect();
                let e = layer.expectations(&angles, w, exec)?;
                let dec =
                    ForwardTrace::run(&spec.decoder, dec_p, &e, rng.as_mut().map(|r| &mut **r as &mut dyn RngCore))?;
                let u = dec.output();
                let (loss, dy) = loss_grad(&qcnn_post(u), y, weight);
                let m = u.len() / 2;
                let du: Vec<f64> = u
                    .iter()
                    .zip(&dy)
                    .enumerate()
                    .map(|(i, (v, d))| {
                        let half = if i < m { super::quantum::V_HALF_WIDTH } else { super::quantum::DELTA_HALF_WIDTH };
                        let t = v.tanh();
                        d * half * (1.0 - t * t)
                    })
                    .collect();
                let (g_enc, rest) = grads.split_at_mut(ne);
                let (g_w, g_dec) = rest.split_at_mut(nq);
                let de = dec.backward(&spec.decoder, dec_p, &du, g_dec);
                let (dw, dphi) = layer.jacobians(&angles, w, true, exec)?;
                for (g, row) in g_w.iter_mut().zip(&dw) {
                    *g += dot(row, &de);
                }
                let dphi = dphi.expect("input rows requested");
                let dz: Vec<f64> = dphi.iter().zip(z).map(|(row, zi)| dot(row, &de) / (1.0 + zi * zi)).collect();
                enc.backward(&spec.encoder, enc_p, &dz, g_enc);
                Ok(loss)
            }
        }
    }

    /// Snapshot: scaler, architecture and parameters, bit-exact.
    pub fn checkpoint(&self) -> Checkpoint {
        let mut blocks = vec![
            CheckpointBlock { name: "scaler_mean".into(), widths: None, values: self.scaler.mean.clone() },
            CheckpointBlock { name: "scaler_std".into(), widths: None, values: self.scaler.std.clone() },
        ];
        match &self.arch {
            Architecture::Mlp { spec } => blocks.push(CheckpointBlock {
                name: "network".into(),
                widths: Some(spec.widths().to_vec()),
                values: self.params.clone(),
            }),
            Architecture::Qnn { spec } => blocks.push(CheckpointBlock {
                name: "ansatz".into(),
                widths: Some(vec![spec.qubits]),
                values: self.params.clone(),
            }),
            Architecture::Qcnn { spec } => {
                let (ne, nq) = (spec.encoder.n_params(), spec.quantum.n_params());
                blocks.push(CheckpointBlock {
                    name: "encoder".into(),
                    widths: Some(spec.encoder.widths().to_vec()),
                    values: self.params[..ne].to_vec(),
                });
                blocks.push(CheckpointBlock {
                    name: "ansatz".into(),
                    widths: Some(vec![spec.quantum.qubits]),
                    values: self.params[ne..ne + nq].to_vec(),
                });
                blocks.push(CheckpointBlock {
                    name: "decoder".into(),
                    widths: Some(spec.decoder.widths().to_vec()),
                    values: self.params[ne + nq..].to_vec(),
                });
            }
        }
        Checkpoint {
            model: format!("{}:{}", self.kind, serde_json::to_string(&self.arch).expect("architecture serializes")),
            blocks,
        }
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self, SurrogateError> {
        let (kind, arch) = ckpt
            .model
            .split_once(':')
            .ok_or_else(|| SurrogateError::Spec(format!("malformed model tag {:?}", ckpt.model)))?;
        let kind: ModelKind = kind.parse()?;
        let arch: Architecture = serde_json::from_str(arch).map_err(|e| SurrogateError::Spec(e.to_string()))?;
        let scaler =
            Scaler { mean: ckpt.block("scaler_mean")?.values.clone(), std: ckpt.block("scaler_std")?.values.clone() };
        let params = match &arch {
            Architecture::Mlp { .. } => ckpt.block("network")?.values.clone(),
            Architecture::Qnn { .. } => ckpt.block("ansatz")?.values.clone(),
            Architecture::Qcnn { .. } => {
                let mut p = ckpt.block("encoder")?.values.clone();
                p.extend_from_slice(&ckpt.block("ansatz")?.values);
                p.extend_from_slice(&ckpt.block("decoder")?.values);
                p
            }
        };
        Self::from_params(kind, arch, scaler, params)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Squared error of one record and `weight · ∂/∂ŷ`.
fn loss_grad(pred: &[f64], y: &[f64], weight: f64) -> (f64, Vec<f64>) {
    let loss = pred.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum();
    let grad = pred.iter().zip(y).map(|(p, t)| 2.0 * weight * (p - t)).collect();
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::parameter_shift_grad;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn toy_qcnn(seed: u64) -> Surrogate {
        let spec = QcnnSpec {
            encoder: MlpSpec::new(vec![2, 3, 2], 0.0).unwrap(),
            quantum: QnnSpec { qubits: 2, entangler: Entangler::Chain },
            decoder: MlpSpec::new(vec![2, 3, 2], 0.0).unwrap(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Surrogate::init(ModelKind::Qcnn, Architecture::Qcnn { spec }, Scaler::identity(2), &mut rng).unwrap()
    }

    fn loss(model: &Surrogate, x: &[f64], y: &[f64]) -> f64 {
        let p = model.predict(x, &mut Executor::exact()).unwrap();
        p.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
    }

    use super::super::quantum::Entangler;

    #[test]
    fn hybrid_gradient_matches_finite_differences() {
        let (x, y) = ([0.7, -0.4], [0.97, -2.5]);
        for seed in 0..5 {
            let model = toy_qcnn(seed);
            let mut grads = vec![0.0; model.n_params()];
            model.accumulate_gradient(&x, &y, 1.0, &mut grads, &mut Executor::exact(), None).unwrap();
            let h = 1e-6;
            for (k, g) in grads.iter().enumerate() {
                let mut plus = model.clone();
                plus.params[k] += h;
                let mut minus = model.clone();
                minus.params[k] -= h;
                let fd = (loss(&plus, &x, &y) - loss(&minus, &x, &y)) / (2.0 * h);
                assert!((fd - g).abs() < 1e-4, "seed {seed} param {k}: fd {fd} vs {g}");
            }
        }
    }

    #[test]
    fn qnn_gradient_reduces_to_parameter_shift() {
        let spec = QnnSpec::for_buses(1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let model = Surrogate::init(ModelKind::Qnn, Architecture::Qnn { spec }, Scaler::identity(2), &mut rng).unwrap();
        let (x, y) = ([0.3, 1.2], [0.9, 1.0]);
        let mut grads = vec![0.0; 4];
        model.accumulate_gradient(&x, &y, 1.0, &mut grads, &mut Executor::exact(), None).unwrap();
        let pred = model.predict(&x, &mut Executor::exact()).unwrap();
        let layer = QuantumLayer::new(spec).unwrap();
        let bindings: Vec<f64> = x.iter().map(|v: &f64| v.atan()).chain(model.params().iter().copied()).collect();
        let gv = parameter_shift_grad(layer.circuit(), &bindings, 0, None).unwrap();
        let gd = parameter_shift_grad(layer.circuit(), &bindings, 1, None).unwrap();
        for k in 0..4 {
            let expected = 2.0 * (pred[0] - y[0]) * 0.15 * gv[2 + k] + 2.0 * (pred[1] - y[1]) * 8.0 * gd[2 + k];
            assert!((grads[k] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_output_error_gives_zero_gradient() {
        let model = toy_qcnn(1);
        let x = [0.2, 0.1];
        let y = model.predict(&x, &mut Executor::exact()).unwrap();
        let mut grads = vec![0.0; model.n_params()];
        let l = model.accumulate_gradient(&x, &y, 1.0, &mut grads, &mut Executor::exact(), None).unwrap();
        assert_eq!(l, 0.0);
        assert!(grads.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn zero_decoder_weights_give_constant_output() {
        let mut model = toy_qcnn(2);
        let Architecture::Qcnn { spec } = model.architecture().clone() else { unreachable!() };
        let start = spec.encoder.n_params() + spec.quantum.n_params();
        let dec = &mut model.params_mut()[start..];
        let n = dec.len();
        dec.iter_mut().for_each(|p| *p = 0.0);
        // Output-layer biases: the last two values.
        dec[n - 2] = 0.4;
        dec[n - 1] = -0.3;
        let expected = vec![to_voltage(0.4f64.tanh()), to_angle((-0.3f64).tanh())];
        for x in [[0.0, 0.0], [5.0, -3.0], [-1.0, 0.5]] {
            assert_eq!(model.predict(&x, &mut Executor::exact()).unwrap(), expected);
        }
    }

    #[test]
    fn qnn_zero_ansatz_predicts_interval_centre() {
        let spec = QnnSpec::for_buses(3);
        let model =
            Surrogate::from_params(ModelKind::Qnn, Architecture::Qnn { spec }, Scaler::identity(6), vec![0.0; 12])
                .unwrap();
        let p = model.predict(&[0.5, 1.0, -0.2, 0.3, 0.1, 2.0], &mut Executor::exact()).unwrap();
        for (i, v) in p.iter().enumerate() {
            let centre = if i < 3 { 1.0 } else { 0.0 };
            assert!((v - centre).abs() < 1e-14);
        }
    }

    #[test]
    fn standard_qcnn_layout() {
        let spec = QcnnSpec::standard(3, 6, 4, 3, 0.0).unwrap();
        assert_eq!(spec.encoder.widths(), &[6, 6, 12, 12, 6]);
        assert_eq!(spec.decoder.widths(), &[6, 6, 12, 6, 6]);
        assert_eq!(spec.hidden_layers(), 7);
        let small = QcnnSpec::standard(3, 2, 1, 1, 0.0).unwrap();
        assert_eq!(small.encoder.widths(), &[6, 2]);
        assert_eq!(small.decoder.widths(), &[2, 6, 6]);
        assert_eq!(small.hidden_layers(), 2);
        assert!(QcnnSpec::standard(3, 6, 0, 3, 0.0).is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let model = toy_qcnn(9);
        let text = model.checkpoint().to_json();
        let back = Surrogate::from_checkpoint(&Checkpoint::from_json(&text).unwrap()).unwrap();
        assert_eq!(back.params(), model.params());
        assert_eq!(back.architecture(), model.architecture());
        let x = [0.1, 0.2];
        assert_eq!(
            back.predict(&x, &mut Executor::exact()).unwrap(),
            model.predict(&x, &mut Executor::exact()).unwrap()
        );
    }

    #[test]
    fn scaler_standardizes() {
        let s = Scaler::fit(&[vec![1.0, 5.0], vec![3.0, 5.0]]).unwrap();
        assert_eq!(s.mean, vec![2.0, 5.0]);
        assert_eq!(s.std, vec![1.0, 1.0]);
        assert_eq!(s.apply(&[3.0, 7.0]), vec![1.0, 2.0]);
    }
}
