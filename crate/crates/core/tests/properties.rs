use proptest::prelude::*;
use qpf_core::datagen::{draw_and_label, generate_pool, split_sizes};
use qpf_core::gridmodel::{feeders, mismatch_jacobian, pf_mismatch, NewtonOptions};
use qpf_core::neural::{backward, ForwardTrace, MlpParams, MlpSpec, TrainConfig};
use qpf_core::qsim::{
    apply_gate, expectation_z, parameter_shift_grad, run_circuit, Angle, Circuit, Gate, NoiseModel, QuantumState,
    Readout, StateMode,
};
use qpf_core::surrogates::{
    train, Architecture, Executor, ModelKind, QcnnSpec, QnnSpec, QuantumLayer, QuantumSettings, Scaler, Surrogate,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_circuit(seed: u64, max_qubits: usize) -> (Circuit, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let qubits = rng.random_range(1..=max_qubits);
    let n_params = rng.random_range(1..=6);
    let mut c = Circuit::new(qubits);
    for _ in 0..rng.random_range(3..=20) {
        let q = rng.random_range(0..qubits);
        let angle = if rng.random_bool(0.75) {
            Angle::Param(rng.random_range(0..n_params))
        } else {
            Angle::Fixed(rng.random_range(-3.0..3.0))
        };
        let gate = match rng.random_range(0..4) {
            0 => Gate::H(q),
            1 => Gate::Rz(q, angle),
            3 if qubits > 1 => Gate::Cnot { control: q, target: (q + rng.random_range(1..qubits)) % qubits },
            _ => Gate::Ry(q, angle),
        };
        c.push(gate).unwrap();
    }
    let bindings = (0..n_params).map(|_| rng.random_range(-3.0..3.0)).collect();
    (c, bindings)
}

fn relu_pattern(spec: &MlpSpec, params: &[f64], xs: &[Vec<f64>]) -> Vec<bool> {
    let mut out = Vec::new();
    for x in xs {
        let trace = ForwardTrace::run(spec, params, x, None).unwrap();
        let acts = trace.activations();
        out.extend(acts[1..acts.len() - 1].iter().flatten().map(|&v| v > 0.0));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn jacobian_matches_finite_differences(seed in any::<u64>(), feeder in 0usize..2) {
        let grid = if feeder == 0 { feeders::four_bus() } else { feeders::thirty_three_bus() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.n_buses();
        let mut v: Vec<f64> = (0..n).map(|_| rng.random_range(0.9..1.1)).collect();
        let mut d: Vec<f64> = (0..n).map(|_| rng.random_range(-0.2..0.2)).collect();
        let jac = mismatch_jacobian(&grid, &v, &d).unwrap();
        let m = grid.n_pq();
        let h = 1e-6;
        for (c, &bus) in grid.pq_buses().iter().enumerate() {
            for (col, vec) in [(c, 0), (m + c, 1)] {
                let target = if vec == 0 { &mut d } else { &mut v };
                let x0 = target[bus];
                target[bus] = x0 + h;
                let up = pf_mismatch(&grid, &v, &d).unwrap();
                let target = if vec == 0 { &mut d } else { &mut v };
                target[bus] = x0 - h;
                let dn = pf_mismatch(&grid, &v, &d).unwrap();
                let target = if vec == 0 { &mut d } else { &mut v };
                target[bus] = x0;
                for r in 0..2 * m {
                    let fd = (up[r] - dn[r]) / (2.0 * h);
                    prop_assert!((fd - jac[(r, col)]).abs() < 1e-5 * (1.0 + fd.abs()), "row {r} col {col}: fd {fd} analytic {}", jac[(r, col)]);
                }
            }
        }
    }

    #[test]
    fn pure_and_mixed_simulation_agree(seed in any::<u64>()) {
        let (c, b) = random_circuit(seed, 6);
        let pure = run_circuit(&c, &b, None).unwrap();
        let mut mixed = QuantumState::zero(c.qubits(), StateMode::Mixed).unwrap();
        for g in c.gates() {
            mixed = apply_gate(&mixed, g, &b, None).unwrap();
        }
        for (a, m) in pure.z_expectations().iter().zip(mixed.z_expectations()) {
            prop_assert!((a - m).abs() < 1e-10);
        }
    }

    #[test]
    fn noisy_evolution_preserves_trace_and_hermiticity(seed in any::<u64>(), p in 0.0f64..1.0, gamma in 0.0f64..1.0) {
        let (c, b) = random_circuit(seed, 5);
        let noise = NoiseModel { depolarizing: p, amplitude_damping: gamma, ..NoiseModel::default() };
        let state = run_circuit(&c, &b, Some(&noise)).unwrap();
        prop_assert_eq!(state.mode(), StateMode::Mixed);
        prop_assert!((state.trace().re - 1.0).abs() < 1e-10 && state.trace().im.abs() < 1e-10);
        prop_assert!(state.hermiticity_error() < 1e-10);
        for z in state.z_expectations() {
            prop_assert!(z.abs() <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn parameter_shift_matches_finite_differences(seed in any::<u64>()) {
        let (c, b) = random_circuit(seed, 6);
        let z = |b: &[f64], q| expectation_z(&run_circuit(&c, b, None).unwrap(), q, None).unwrap();
        for q in 0..c.qubits() {
            let g = parameter_shift_grad(&c, &b, q, None).unwrap();
            for k in 0..g.len() {
                let (mut up, mut dn) = (b.clone(), b.clone());
                up[k] += 1e-5;
                dn[k] -= 1e-5;
                let fd = (z(&up, q) - z(&dn, q)) / 2e-5;
                prop_assert!((fd - g[k]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn mlp_backprop_matches_finite_differences(seed in any::<u64>(), depth in 2usize..=8, pq in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = MlpSpec::for_depth(pq, depth, 0.0).unwrap();
        let params = MlpParams::init(&spec, &mut rng);
        let w = 2 * pq;
        let xs: Vec<Vec<f64>> = (0..3).map(|_| (0..w).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let ys: Vec<Vec<f64>> = (0..3).map(|_| (0..w).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let (_, grads) = backward(&spec, &params, &xs, &ys).unwrap();
        let pattern = relu_pattern(&spec, &params, &xs);
        for k in 0..params.len() {
            let mut up = params.values.clone();
            up[k] += 1e-6;
            let mut dn = params.values.clone();
            dn[k] -= 1e-6;
            // Finite differences are meaningless across a rectifier kink.
            if relu_pattern(&spec, &up, &xs) != pattern || relu_pattern(&spec, &dn, &xs) != pattern {
                continue;
            }
            let fd = (backward(&spec, &up, &xs, &ys).unwrap().0 - backward(&spec, &dn, &xs, &ys).unwrap().0) / 2e-6;
            prop_assert!((fd - grads[k]).abs() <= 1e-5 * fd.abs().max(grads[k].abs()).max(1e-2), "param {k}: fd {fd} backprop {}", grads[k]);
        }
    }

    #[test]
    fn quantum_outputs_stay_in_range(seed in any::<u64>(), pq in 1usize..=3, hybrid in any::<bool>(), scale in 0.1f64..1e3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (kind, arch) = if hybrid {
            (ModelKind::Qcnn, Architecture::Qcnn { spec: QcnnSpec::standard(pq, 4, 2, 2, 0.0).unwrap() })
        } else {
            (ModelKind::Qnn, Architecture::Qnn { spec: QnnSpec::for_buses(pq) })
        };
        let params = (0..arch.n_params()).map(|_| rng.random_range(-scale..scale)).collect();
        let model = Surrogate::from_params(kind, arch, Scaler::identity(2 * pq), params).unwrap();
        let x: Vec<f64> = (0..2 * pq).map(|_| rng.random_range(-scale..scale)).collect();
        let y = model.predict(&x, &mut Executor::exact()).unwrap();
        for v in &y[..pq] {
            prop_assert!((0.85..=1.15).contains(v), "voltage {v}");
        }
        for d in &y[pq..] {
            prop_assert!((-8.0..=8.0).contains(d), "angle {d}");
        }
    }

    #[test]
    fn shot_estimates_track_exact_expectations(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = QnnSpec::for_buses(3);
        let layer = QuantumLayer::new(spec).unwrap();
        let angles: Vec<f64> = (0..spec.qubits).map(|_| rng.random_range(-1.5..1.5)).collect();
        let weights: Vec<f64> = (0..spec.n_params()).map(|_| rng.random_range(-3.0..3.0)).collect();
        let exact = layer.expectations(&angles, &weights, &mut Executor::exact()).unwrap();
        let shots = layer.expectations(&angles, &weights, &mut Executor::new(Readout::Shots(8192), None, seed)).unwrap();
        for (e, s) in exact.iter().zip(&shots) {
            prop_assert!((e - s).abs() < 0.05);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn one_epoch_takes_ceil_n_over_batch_steps(k in 24usize..200, seed in any::<u64>()) {
        let grid = feeders::four_bus();
        let pool = generate_pool(&grid, 400, 0.3, seed).unwrap();
        let ds = draw_and_label(&pool, k, &grid, seed, NewtonOptions::default()).unwrap();
        let spec = MlpSpec::for_depth(grid.n_pq(), 2, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut model = Surrogate::init(ModelKind::Nn, Architecture::Mlp { spec }, Scaler::identity(6), &mut rng).unwrap();
        let cfg = TrainConfig { epochs: 1, seed, ..TrainConfig::default() };
        let report = train(&mut model, &ds, &cfg, QuantumSettings::default()).unwrap();
        let (n_train, _, _) = split_sizes(k);
        prop_assert_eq!(report.steps, n_train.div_ceil(16) as u64);
        prop_assert_eq!(report.epochs.len(), 1);
    }
}
