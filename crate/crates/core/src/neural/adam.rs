#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, weight_decay: 0.0, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// One bias-corrected Adam update. Weight decay is decoupled: parameters are
/// first scaled by `1 − lr·decay`, then moved by the Adam step.
pub fn adam_step(params: &mut [f64], grads: &[f64], m: &mut [f64], v: &mut [f64], cfg: &AdamConfig, step_count: u64) {
    assert!(step_count >= 1, "Adam steps are counted from 1");
    assert_eq!(params.len(), grads.len());
    let t = step_count as i32;
    let c1 = 1.0 - cfg.beta1.powi(t);
    let c2 = 1.0 - cfg.beta2.powi(t);
    let shrink = 1.0 - cfg.learning_rate * cfg.weight_decay;
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[i] / c1;
        let v_hat = v[i] / c2;
        params[i] = params[i] * shrink - cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.eps);
    }
}

/// Adam state for one flat parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    steps: u64,
}

impl Adam {
    pub fn new(cfg: AdamConfig, n_params: usize) -> Self {
        Self { cfg, m: vec![0.0; n_params], v: vec![0.0; n_params], steps: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.steps += 1;
        adam_step(params, grads, &mut self.m, &mut self.v, &self.cfg, self.steps);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_no_decay_is_identity() {
        let mut p = vec![0.3, -1.2];
        let mut opt = Adam::new(AdamConfig::default(), 2);
        opt.step(&mut p, &[0.0, 0.0]);
        assert_eq!(p, vec![0.3, -1.2]);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let cfg = AdamConfig { learning_rate: 0.01, ..Default::default() };
        let mut p = vec![1.0, 1.0, 1.0];
        let g = [0.5, -3.0, 1e-3];
        let mut opt = Adam::new(cfg, 3);
        opt.step(&mut p, &g);
        for (pi, gi) in p.iter().zip(g) {
            // |Δ| = lr · |g| / (|g| + ε)
            let expected = 1.0 - 0.01 * gi / (gi.abs() + 1e-8);
            assert!((pi - expected).abs() < 1e-15);
            assert!(((pi - 1.0).abs() - 0.01).abs() < 1e-6);
        }
    }

    #[test]
    fn decay_only_shrinks() {
        let cfg = AdamConfig { learning_rate: 0.1, weight_decay: 0.5, ..Default::default() };
        let mut p = vec![2.0, -4.0];
        let mut opt = Adam::new(cfg, 2);
        opt.step(&mut p, &[0.0, 0.0]);
        assert_eq!(p, vec![2.0 * 0.95, -4.0 * 0.95]);
    }
}
