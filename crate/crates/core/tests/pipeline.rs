use qpf_core::datagen::{draw_and_label, generate_pool, Split};
use qpf_core::experiments::{run_experiment, ExperimentConfig, ExperimentId, NoiseMode, RunRecord};
use qpf_core::gridmodel::{feeders, NewtonOptions};
use qpf_core::neural::TrainConfig;
use qpf_core::surrogates::{train, Architecture, ModelKind, QcnnSpec, QuantumSettings, Scaler, Surrogate};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small(out: &std::path::Path, models: Vec<ModelKind>, sweep: Vec<f64>) -> ExperimentConfig {
    ExperimentConfig {
        seeds: vec![1, 4],
        epochs: 4,
        dataset_size: 64,
        models,
        sweep,
        artifacts: false,
        out: out.to_path_buf(),
        ..ExperimentConfig::default()
    }
}

fn find<'a>(records: &'a [RunRecord], seed: u64, model: &str, value: Option<f64>) -> &'a RunRecord {
    records
        .iter()
        .find(|r| r.seed == seed && r.model == model && value.is_none_or(|v| r.value == v))
        .unwrap_or_else(|| panic!("no record for seed {seed} {model} {value:?}"))
}

#[test]
fn trainsize_base_point_reproduces_generalization() {
    let dir = tempfile::tempdir().unwrap();
    let grid = feeders::four_bus();
    let gen = run_experiment(
        ExperimentId::Generalization,
        &small(&dir.path().join("g"), vec![ModelKind::Nn, ModelKind::Qcnn], vec![]),
        &grid,
    )
    .unwrap();
    let size = run_experiment(
        ExperimentId::Trainsize,
        &small(&dir.path().join("t"), vec![ModelKind::Nn, ModelKind::Qcnn], vec![16.0, 40.0]),
        &grid,
    )
    .unwrap();
    assert!(gen.all_ok() && size.all_ok());
    for seed in [1, 4] {
        for model in ["nn", "qcnn"] {
            let a = find(&gen.records, seed, model, None);
            let b = find(&size.records, seed, model, Some(16.0));
            assert_eq!(a.test_mse.to_bits(), b.test_mse.to_bits(), "{model} seed {seed}");
            assert_eq!(a.train_mse.to_bits(), b.train_mse.to_bits());
        }
    }
}

#[test]
fn robustness_at_default_corruption_reproduces_generalization() {
    let dir = tempfile::tempdir().unwrap();
    let grid = feeders::four_bus();
    let models = vec![ModelKind::Nn, ModelKind::Qnn];
    let gen =
        run_experiment(ExperimentId::Generalization, &small(&dir.path().join("g"), models.clone(), vec![]), &grid)
            .unwrap();
    let rob = run_experiment(ExperimentId::Robustness, &small(&dir.path().join("r"), models, vec![0.02, 0.1]), &grid)
        .unwrap();
    for seed in [1, 4] {
        for model in ["nn", "qnn"] {
            let a = find(&gen.records, seed, model, None);
            let b = find(&rob.records, seed, model, Some(0.1));
            assert_eq!(a.test_mse.to_bits(), b.test_mse.to_bits(), "{model} seed {seed}");
        }
    }
}

#[test]
fn zero_noise_point_matches_noiseless_baseline() {
    let dir = tempfile::tempdir().unwrap();
    let grid = feeders::four_bus();
    for mode in [NoiseMode::Eval, NoiseMode::Train] {
        let cfg = ExperimentConfig {
            noise_mode: mode,
            ..small(&dir.path().join(format!("{mode:?}")), vec![ModelKind::Qnn], vec![0.0, 0.05])
        };
        let res = run_experiment(ExperimentId::NoiseSweep, &cfg, &grid).unwrap();
        let gen = run_experiment(ExperimentId::Generalization, &cfg, &grid).unwrap();
        for seed in [1, 4] {
            let baseline = find(&gen.records, seed, "qnn", None).test_mse;
            for r in res.records.iter().filter(|r| r.seed == seed && r.value == 0.0) {
                assert!(
                    (r.test_mse - baseline).abs() <= 1e-12 * baseline,
                    "{mode:?} {} {}: {} vs {baseline}",
                    r.point,
                    r.seed,
                    r.test_mse
                );
            }
            let noisy =
                res.records.iter().find(|r| r.seed == seed && r.point == "depolarizing" && r.value == 0.05).unwrap();
            assert_ne!(noisy.test_mse, baseline);
        }
    }
}

#[test]
fn qcnn_fits_a_constant_target() {
    let grid = feeders::four_bus();
    let pool = generate_pool(&grid, 400, 0.3, 7).unwrap();
    let mut ds = draw_and_label(&pool, 128, &grid, 7, NewtonOptions::default()).unwrap();
    for r in &mut ds.records {
        r.y = vec![0.97, 0.99, 1.02, -2.5, 1.0, 0.5];
    }
    let spec = QcnnSpec::standard(3, 6, 4, 3, 0.0).unwrap();
    let (xs, _) = ds.split(Split::Train);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut model =
        Surrogate::init(ModelKind::Qcnn, Architecture::Qcnn { spec }, Scaler::fit(&xs).unwrap(), &mut rng).unwrap();
    let cfg = TrainConfig { epochs: 200, learning_rate: 1e-2, weight_decay: 0.0, ..TrainConfig::default() };
    let report = train(&mut model, &ds, &cfg, QuantumSettings::default()).unwrap();
    assert!(report.final_train_mse() < 1e-3, "final train mse {}", report.final_train_mse());
    assert!(report.test_mse < 1e-3);
}
