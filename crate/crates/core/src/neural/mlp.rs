use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::NeuralError;

/// Layer widths from input to output. Hidden layers use the rectifier, the
/// output layer is affine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    widths: Vec<usize>,
    dropout: f64,
}

impl MlpSpec {
    pub fn new(widths: Vec<usize>, dropout: f64) -> Result<Self, NeuralError> {
        if widths.len() < 3 {
            return Err(NeuralError::Layout(format!("need at least one hidden layer, got widths {widths:?}")));
        }
        Self::unchecked(widths, dropout)
    }

    /// Purely affine map, no hidden layer: the linear-regression baseline.
    pub fn linear(input: usize, output: usize) -> Result<Self, NeuralError> {
        Self::unchecked(vec![input, output], 0.0)
    }

    fn unchecked(widths: Vec<usize>, dropout: f64) -> Result<Self, NeuralError> {
        if widths.contains(&0) {
            return Err(NeuralError::Layout(format!("zero-width layer in {widths:?}")));
        }
        if !(0.0..1.0).contains(&dropout) {
            return Err(NeuralError::Layout(format!("dropout {dropout} outside [0, 1)")));
        }
        Ok(Self { widths, dropout })
    }

    /// Widths of the depth-`hidden` architecture for a system with `pq` PQ
    /// buses: `2·pq` in and out, first and last hidden layers `2·pq` wide,
    /// intermediate hidden layers `4·pq` wide. Depth 0 is the linear model.
    pub fn hidden_widths(pq: usize, hidden: usize) -> Vec<usize> {
        (0..hidden).map(|l| if l == 0 || l + 1 == hidden { 2 * pq } else { 4 * pq }).collect()
    }

    pub fn for_depth(pq: usize, hidden: usize, dropout: f64) -> Result<Self, NeuralError> {
        if hidden == 0 {
            return Self::linear(2 * pq, 2 * pq);
        }
        let mut widths = vec![2 * pq];
        widths.extend(Self::hidden_widths(pq, hidden));
        widths.push(2 * pq);
        Self::new(widths, dropout)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn dropout(&self) -> f64 {
        self.dropout
    }

    pub fn with_dropout(&self, dropout: f64) -> Result<Self, NeuralError> {
        Self::unchecked(self.widths.clone(), dropout)
    }

    pub fn input_width(&self) -> usize {
        self.widths[0]
    }

    pub fn output_width(&self) -> usize {
        *self.widths.last().expect("non-empty widths")
    }

    pub fn hidden_layers(&self) -> usize {
        self.widths.len() - 2
    }

    fn n_layers(&self) -> usize {
        self.widths.len() - 1
    }

    /// Offset of layer `l`'s weight block; its biases follow the weights.
    fn offset(&self, l: usize) -> usize {
        (0..l).map(|k| (self.widths[k] + 1) * self.widths[k + 1]).sum()
    }

    pub fn n_params(&self) -> usize {
        self.offset(self.n_layers())
    }
}

/// Flat parameter vector; layer `l` stores its `out × in` weights row-major
/// followed by `out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    pub values: Vec<f64>,
}

impl MlpParams {
    pub fn zeros(spec: &MlpSpec) -> Self {
        Self { values: vec![0.0; spec.n_params()] }
    }

    /// Weights and biases uniform in `±1/√fan_in`.
    pub fn init(spec: &MlpSpec, rng: &mut impl Rng) -> Self {
        let mut values = Vec::with_capacity(spec.n_params());
        for l in 0..spec.n_layers() {
            let (fan_in, fan_out) = (spec.widths[l], spec.widths[l + 1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            for _ in 0..(fan_in + 1) * fan_out {
                values.push(rng.random_range(-bound..bound));
            }
        }
        Self { values }
    }

    pub fn from_values(spec: &MlpSpec, values: Vec<f64>) -> Result<Self, NeuralError> {
        if values.len() != spec.n_params() {
            return Err(NeuralError::Layout(format!(
                "{} values for a network with {} parameters",
                values.len(),
                spec.n_params()
            )));
        }
        Ok(Self { values })
    }
}

impl std::ops::Deref for MlpParams {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

/// Cached activations of one forward pass, consumed by backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// `activations[0]` is the input, the last entry the network output.
    activations: Vec<Vec<f64>>,
    /// Inverted-dropout scale per hidden unit, when dropout was active.
    masks: Vec<Option<Vec<f64>>>,
}

impl ForwardTrace {
    /// Forward pass. Dropout masks are drawn from `dropout_rng` when given
    /// and `spec` has non-zero dropout.
    pub fn run(
        spec: &MlpSpec,
        params: &[f64],
        x: &[f64],
        mut dropout_rng: Option<&mut dyn RngCore>,
    ) -> Result<Self, NeuralError> {
        if x.len() != spec.input_width() {
            return Err(NeuralError::Dimension { expected: spec.input_width(), got: x.len() });
        }
        let layers = spec.n_layers();
        let mut activations = Vec::with_capacity(layers + 1);
        let mut masks = Vec::with_capacity(layers);
        activations.push(x.to_vec());
        for l in 0..layers {
            let (fan_in, fan_out) = (spec.widths[l], spec.widths[l + 1]);
            let off = spec.offset(l);
            let w = &params[off..off + fan_in * fan_out];
            let b = &params[off + fan_in * fan_out..off + (fan_in + 1) * fan_out];
            let input = &activations[l];
            let mut out: Vec<f64> = (0..fan_out)
                .map(|o| b[o] + w[o * fan_in..(o + 1) * fan_in].iter().zip(input).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            let hidden = l + 1 < layers;
            let mut mask = None;
            if hidden {
                for v in out.iter_mut() {
                    *v = v.max(0.0);
                }
                if spec.dropout > 0.0 {
                    if let Some(rng) = dropout_rng.as_deref_mut() {
                        let keep = 1.0 - spec.dropout;
                        let m: Vec<f64> = (0..fan_out)
                            .map(|_| if rng.random::<f64>() < spec.dropout { 0.0 } else { 1.0 / keep })
                            .collect();
                        for (v, s) in out.iter_mut().zip(&m) {
                            *v *= s;
                        }
                        mask = Some(m);
                    }
                }
            }
            masks.push(mask);
            activations.push(out);
        }
        Ok(Self { activations, masks })
    }

    pub fn output(&self) -> &[f64] {
        self.activations.last().expect("trace has an output")
    }

    /// Input, post-activation hidden layers and output, in layer order.
    pub fn activations(&self) -> &[Vec<f64>] {
        &self.activations
    }

    /// Accumulates `∂L/∂params` into `grads` given `∂L/∂output`, and returns
    /// `∂L/∂input`.
    pub fn backward(&self, spec: &MlpSpec, params: &[f64], out_grad: &[f64], grads: &mut [f64]) -> Vec<f64> {
        let layers = spec.n_layers();
        let mut delta = out_grad.to_vec();
        for l in (0..layers).rev() {
            let (fan_in, fan_out) = (spec.widths[l], spec.widths[l + 1]);
            if l + 1 < layers {
                // Rectifier (and dropout scale) of the hidden layer this delta belongs to.
                let act = &self.activations[l + 1];
                for (o, d) in delta.iter_mut().enumerate() {
                    if act[o] <= 0.0 {
                        *d = 0.0;
                    } else if let Some(m) = &self.masks[l] {
                        *d *= m[o];
                    }
                }
            }
            let off = spec.offset(l);
            let input = &self.activations[l];
            for o in 0..fan_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                let row = &mut grads[off + o * fan_in..off + (o + 1) * fan_in];
                for (g, a) in row.iter_mut().zip(input) {
                    *g += d * a;
                }
                grads[off + fan_in * fan_out + o] += d;
            }
            let w = &params[off..off + fan_in * fan_out];
            let mut prev = vec![0.0; fan_in];
            for o in 0..fan_out {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                for (p, wv) in prev.iter_mut().zip(&w[o * fan_in..(o + 1) * fan_in]) {
                    *p += d * wv;
                }
            }
            delta = prev;
        }
        delta
    }
}

/// Evaluation-mode forward pass.
pub fn forward(spec: &MlpSpec, params: &[f64], x: &[f64]) -> Result<Vec<f64>, NeuralError> {
    Ok(ForwardTrace::run(spec, params, x, None)?.activations.pop().expect("output"))
}

fn check_batch(pred: &[Vec<f64>], target: &[Vec<f64>]) -> Result<(), NeuralError> {
    if pred.is_empty() {
        return Err(NeuralError::EmptyBatch);
    }
    if pred.len() != target.len() {
        return Err(NeuralError::Dimension { expected: target.len(), got: pred.len() });
    }
    for (p, t) in pred.iter().zip(target) {
        if p.len() != t.len() {
            return Err(NeuralError::Dimension { expected: t.len(), got: p.len() });
        }
    }
    Ok(())
}

/// Mean over records of the summed squared component error.
pub fn mse_loss(pred: &[Vec<f64>], target: &[Vec<f64>]) -> Result<f64, NeuralError> {
    check_batch(pred, target)?;
    let total: f64 =
        pred.iter().zip(target).map(|(p, t)| p.iter().zip(t).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()).sum();
    Ok(total / pred.len() as f64)
}

/// Mean squared error averaged over records and components.
pub fn mse_per_component(pred: &[Vec<f64>], target: &[Vec<f64>]) -> Result<f64, NeuralError> {
    let d = target.first().map_or(1, Vec::len).max(1);
    Ok(mse_loss(pred, target)? / d as f64)
}

/// Loss and exact gradient of [`mse_loss`] over a batch, without dropout.
pub fn backward(
    spec: &MlpSpec,
    params: &[f64],
    xs: &[Vec<f64>],
    ys: &[Vec<f64>],
) -> Result<(f64, Vec<f64>), NeuralError> {
    if xs.is_empty() {
        return Err(NeuralError::EmptyBatch);
    }
    let n = xs.len() as f64;
    let mut grads = vec![0.0; spec.n_params()];
    let mut preds = Vec::with_capacity(xs.len());
    for (x, y) in xs.iter().zip(ys) {
        let trace = ForwardTrace::run(spec, params, x, None)?;
        if y.len() != spec.output_width() {
            return Err(NeuralError::Dimension { expected: spec.output_width(), got: y.len() });
        }
        let g: Vec<f64> = trace.output().iter().zip(y).map(|(p, t)| 2.0 * (p - t) / n).collect();
        trace.backward(spec, params, &g, &mut grads);
        preds.push(trace.output().to_vec());
    }
    Ok((mse_loss(&preds, ys)?, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_params_give_zero_output() {
        let spec = MlpSpec::for_depth(3, 4, 0.0).unwrap();
        let out = forward(&spec, &MlpParams::zeros(&spec), &[1.0, -2.0, 3.0, 0.5, 0.1, 9.0]).unwrap();
        assert_eq!(out, vec![0.0; 6]);
    }

    #[test]
    fn identity_weights_pass_positive_input() {
        let spec = MlpSpec::new(vec![2, 2, 2], 0.0).unwrap();
        // layer 0: W = I, b = 0; layer 1: W = I, b = 0
        let params =
            MlpParams::from_values(&spec, vec![1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(forward(&spec, &params, &[0.7, 2.5]).unwrap(), vec![0.7, 2.5]);
    }

    #[test]
    fn hand_computed_two_by_two() {
        // hidden = relu([[1, -2], [0.5, 1]] x + [0.1, -0.2]); out = [[2, -1]] h + 0.3
        let spec = MlpSpec::new(vec![2, 2, 1], 0.0).unwrap();
        let params = MlpParams::from_values(&spec, vec![1.0, -2.0, 0.5, 1.0, 0.1, -0.2, 2.0, -1.0, 0.3]).unwrap();
        // x = (3, 1): pre = (1.1, 2.3) -> h = (1.1, 2.3); out = 2.2 - 2.3 + 0.3 = 0.2
        let out = forward(&spec, &params, &[3.0, 1.0]).unwrap();
        assert!((out[0] - 0.2).abs() < 1e-12);
        // x = (1, 2): pre = (-2.9, 2.3) -> h = (0, 2.3); out = -2.3 + 0.3 = -2.0
        let out = forward(&spec, &params, &[1.0, 2.0]).unwrap();
        assert!((out[0] + 2.0).abs() < 1e-12);
    }

    #[test]
    fn mse_conventions() {
        let p = vec![vec![2.0, 3.0, 4.0]];
        let t = vec![vec![1.0, 2.0, 3.0]];
        assert_eq!(mse_loss(&p, &t).unwrap(), 3.0);
        assert_eq!(mse_per_component(&p, &t).unwrap(), 1.0);
        assert_eq!(mse_loss(&t, &t).unwrap(), 0.0);
        // ((1-0)^2 + (2-4)^2 + (0-3)^2 + (5-1)^2) / 2 = 30 / 2
        let p = vec![vec![1.0, 2.0], vec![0.0, 5.0]];
        let t = vec![vec![0.0, 4.0], vec![3.0, 1.0]];
        assert_eq!(mse_loss(&p, &t).unwrap(), 15.0);
        assert_eq!(mse_loss(&[], &[]), Err(NeuralError::EmptyBatch));
    }

    #[test]
    fn zero_error_zero_gradient() {
        let spec = MlpSpec::for_depth(2, 3, 0.0).unwrap();
        let params = MlpParams::init(&spec, &mut ChaCha8Rng::seed_from_u64(1));
        let xs = vec![vec![0.3, -0.1, 0.8, 0.2]];
        let ys = vec![forward(&spec, &params, &xs[0]).unwrap()];
        let (loss, g) = backward(&spec, &params, &xs, &ys).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dead_unit_gets_no_incoming_gradient() {
        let spec = MlpSpec::new(vec![2, 2, 1], 0.0).unwrap();
        // Hidden unit 1 has weights (-1, -1) and bias -5: dead for positive inputs.
        let params = MlpParams::from_values(&spec, vec![1.0, 1.0, -1.0, -1.0, 0.0, -5.0, 1.0, 1.0, 0.0]).unwrap();
        let (_, g) = backward(&spec, &params, &[vec![1.0, 2.0]], &[vec![10.0]]).unwrap();
        assert_eq!(&g[2..4], &[0.0, 0.0]);
        assert_eq!(g[5], 0.0);
        assert!(g[0] != 0.0);
    }

    #[test]
    fn dimension_mismatch() {
        let spec = MlpSpec::for_depth(2, 2, 0.0).unwrap();
        assert_eq!(
            forward(&spec, &MlpParams::zeros(&spec), &[1.0]).unwrap_err(),
            NeuralError::Dimension { expected: 4, got: 1 }
        );
    }

    #[test]
    fn architecture_rule() {
        assert_eq!(MlpSpec::for_depth(3, 7, 0.0).unwrap().widths(), &[6, 6, 12, 12, 12, 12, 12, 6, 6]);
        assert_eq!(MlpSpec::for_depth(3, 2, 0.0).unwrap().widths(), &[6, 6, 6, 6]);
        assert_eq!(MlpSpec::for_depth(3, 0, 0.0).unwrap().widths(), &[6, 6]);
        assert!(MlpSpec::new(vec![6, 6], 0.0).is_err());
    }
}
