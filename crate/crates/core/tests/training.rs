use rand::SeedableRng;
use stvqc::ansatz::{AnsatzSpec, BlockKind, LayerSpec};
use stvqc::data::*;
use stvqc::encoder::EncoderSpec;
use stvqc::sim::NoiseModel;
use stvqc::trainer::*;

fn small_split(id: DatasetId, seed: u64) -> Split {
    bloch_split(&DatasetSpec::new(id, seed).with_sizes(96, 48)).unwrap()
}

fn st_model() -> Model {
    let ansatz = AnsatzSpec::Tree { layers: LayerSpec::new(vec![1, 1]), kind: BlockKind::Ring };
    ModelSpec::new(EncoderSpec::Bloch { copies: 2 }, ansatz, 2).build().unwrap()
}

fn config(epochs: usize) -> TrainConfig {
    TrainConfig { batch_size: 32, epochs, lr: 0.05, seed: 3 }
}

#[test]
fn training_is_deterministic_for_a_seed() {
    let split = small_split(DatasetId::N1, 0);
    let a = train(&st_model(), &split.train, &split.test, &config(3)).unwrap();
    let b = train(&st_model(), &split.train, &split.test, &config(3)).unwrap();
    assert_eq!(a, b);
    let c = train(&st_model(), &split.train, &split.test, &TrainConfig { seed: 4, ..config(3) }).unwrap();
    assert_ne!(a.params, c.params);
}

#[test]
fn zero_epochs_reports_the_initial_model() {
    let split = small_split(DatasetId::N1, 0);
    let model = st_model();
    let report = train(&model, &split.train, &split.test, &config(0)).unwrap();
    assert_eq!(report.epochs.len(), 1);
    assert_eq!(report.params.len(), model.n_params());
    let direct = evaluate(&model, &report.params, &split.test, &EvalOptions::default()).unwrap();
    assert_eq!(direct.accuracy, report.test_accuracy);
}

#[test]
fn training_lowers_the_loss() {
    let split = small_split(DatasetId::N1, 1);
    let report = train(&st_model(), &split.train, &split.test, &config(15)).unwrap();
    assert!(report.final_loss() < report.epochs[0].loss);
    assert!(report.epochs.iter().all(|e| e.loss.is_finite()));
}

#[test]
fn zero_noise_sampling_matches_the_ideal_accuracy() {
    let split = small_split(DatasetId::L1, 2);
    let model = st_model();
    let report = train(&model, &split.train, &split.test, &config(5)).unwrap();
    let noisy = EvalOptions { noise: Some(NoiseModel::new(0.0, 0.0, 0.0, 1).unwrap()), ..Default::default() };
    let eval = evaluate(&model, &report.params, &split.test, &noisy).unwrap();
    assert!((eval.accuracy - report.test_accuracy).abs() <= 0.02);
    assert!(eval.deviation < 0.02);
}

#[test]
fn deviation_grows_with_two_qubit_noise() {
    let split = small_split(DatasetId::N1, 0);
    let model = st_model();
    let params = train(&model, &split.train, &split.test, &config(2)).unwrap().params;
    let samples = &split.test[..8];
    let devs: Vec<f64> = [0.0, 0.02, 0.05, 0.1]
        .iter()
        .map(|&p2| {
            let opts = EvalOptions { noise: Some(NoiseModel::new(0.0, p2, 0.0, 5).unwrap()), ..Default::default() };
            evaluate(&model, &params, samples, &opts).unwrap().deviation
        })
        .collect();
    assert!(devs.windows(2).all(|w| w[0] <= w[1] + 1e-3), "{devs:?}");
    assert!(devs[3] > devs[0]);
}

#[test]
fn invalid_configs_are_rejected() {
    let split = small_split(DatasetId::N1, 0);
    let bad = TrainConfig { batch_size: 0, ..config(1) };
    assert!(train(&st_model(), &split.train, &split.test, &bad).is_err());
    let bad = TrainConfig { lr: 0.0, ..config(1) };
    assert!(train(&st_model(), &split.train, &split.test, &bad).is_err());
}

#[test]
fn checkpoints_round_trip() {
    let split = small_split(DatasetId::N1, 0);
    let model = st_model();
    let report = train(&model, &split.train, &split.test, &config(1)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    let rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let ckpt = Checkpoint { spec: model.spec.clone(), params: report.params.clone(), config: config(1), rng };
    ckpt.save(&path).unwrap();
    let back = Checkpoint::load(&path).unwrap();
    assert_eq!((back.spec, back.params, back.config), (ckpt.spec, ckpt.params, ckpt.config));
    assert_eq!(back.rng, ckpt.rng);
}

#[test]
fn vqc_with_one_copy_cannot_fit_the_nonlinear_sets() {
    let split = small_split(DatasetId::N1, 0);
    let model = ModelSpec::new(EncoderSpec::Bloch { copies: 1 }, AnsatzSpec::Vqc { blocks: 1, kind: BlockKind::Ring }, 2)
        .build()
        .unwrap();
    let report = train(&model, &split.train, &split.test, &config(10)).unwrap();
    assert!(report.test_accuracy <= 0.80, "{}", report.test_accuracy);
}
