use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use qpf_core::gridmodel::{feeders, solve_newton_raphson, NewtonOptions};
use qpf_core::neural::{backward, forward, MlpSpec};
use qpf_core::qsim::{parameter_shift_grad, run_circuit, NoiseModel};
use qpf_core::surrogates::{Executor, QnnSpec, QuantumLayer};

fn newton(c: &mut Criterion) {
    let opts = NewtonOptions::default();
    for (name, grid) in [("nr_4bus", feeders::four_bus()), ("nr_33bus", feeders::thirty_three_bus())] {
        c.bench_function(name, |b| b.iter(|| solve_newton_raphson(black_box(&grid), opts).unwrap()));
    }
}

fn simulator(c: &mut Criterion) {
    let spec = QnnSpec::for_buses(3);
    let layer = QuantumLayer::new(spec).unwrap();
    let circuit = layer.circuit().clone();
    let bindings: Vec<f64> = (0..circuit.n_params()).map(|k| 0.1 * k as f64 - 0.7).collect();
    let angles = &bindings[..spec.qubits];
    let weights = &bindings[spec.qubits..];

    c.bench_function("statevector_6q", |b| b.iter(|| run_circuit(black_box(&circuit), &bindings, None).unwrap()));
    let noise = NoiseModel { depolarizing: 0.02, amplitude_damping: 0.02, ..NoiseModel::default() };
    c.bench_function("density_matrix_6q", |b| {
        b.iter(|| run_circuit(black_box(&circuit), &bindings, Some(&noise)).unwrap())
    });
    c.bench_function("parameter_shift_6q", |b| {
        b.iter(|| parameter_shift_grad(black_box(&circuit), &bindings, 0, None).unwrap())
    });
    c.bench_function("qnn_layer_jacobians_6q", |b| {
        let mut exec = Executor::exact();
        b.iter(|| layer.jacobians(black_box(angles), weights, true, &mut exec).unwrap())
    });
}

fn mlp(c: &mut Criterion) {
    let spec = MlpSpec::for_depth(3, 7, 0.0).unwrap();
    let params: Vec<f64> = (0..spec.n_params()).map(|k| ((k % 13) as f64 - 6.0) * 0.05).collect();
    let xs: Vec<Vec<f64>> = (0..16).map(|i| (0..6).map(|j| ((i + j) % 5) as f64 * 0.2 - 0.4).collect()).collect();
    let ys: Vec<Vec<f64>> = (0..16).map(|i| (0..6).map(|j| ((i * j) % 3) as f64 - 1.0).collect()).collect();
    c.bench_function("nn7_forward", |b| b.iter(|| forward(&spec, black_box(&params), &xs[0]).unwrap()));
    c.bench_function("nn7_backward_batch16", |b| b.iter(|| backward(&spec, black_box(&params), &xs, &ys).unwrap()));
}

criterion_group!(kernels, newton, simulator, mlp);
criterion_main!(kernels);
