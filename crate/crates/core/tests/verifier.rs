mod common;

use common::{pair_of, random_image};
use iris_forensics::dataset::{generate_toy_corpus, ToyCorpusConfig};
use iris_forensics::types::PairLabel;
use iris_forensics::verifier::{
    accuracy_at, classify_pair, evaluate_dataset, load_checkpoint, pair_energy, pair_similarity,
    save_checkpoint, select_threshold, train, Architecture, EncoderState, LossConfig,
    TrainingSummary, Verdict, VerifierError,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn toy(seed: u64, n: usize) -> Vec<(iris_forensics::types::IrisPair, PairLabel)> {
    let mut cfg = ToyCorpusConfig::new(n, n, 0.5, 0.02, seed);
    cfg.crop_size = 16;
    generate_toy_corpus(&cfg)
}

fn tiny_arch() -> Architecture {
    Architecture::custom("Tiny", 16, vec![4, 8], 8)
}

fn loss(epochs: usize) -> LossConfig {
    LossConfig {
        epochs,
        batch_size: 8,
        learning_rate: 5e-3,
        ..LossConfig::default()
    }
}

#[test]
fn training_is_bit_identical_for_a_seed() {
    let pairs = toy(1, 20);
    let a = train(tiny_arch(), &pairs, &loss(2), 9).unwrap();
    let b = train(tiny_arch(), &pairs, &loss(2), 9).unwrap();
    assert_eq!(a.state.params, b.state.params);
    assert_eq!(a.history, b.history);
    let c = train(tiny_arch(), &pairs, &loss(2), 10).unwrap();
    assert_ne!(a.state.params, c.state.params);
}

#[test]
fn training_separates_the_toy_classes() {
    let pairs = toy(2, 40);
    let out = train(tiny_arch(), &pairs, &loss(8), 4).unwrap();
    let first = out.history.first().unwrap().mean_loss;
    let last = out.history.last().unwrap().mean_loss;
    assert!(last < first, "loss {first} -> {last}");

    let held_out = toy(3, 30);
    let tau = select_threshold(&out.state, &held_out).unwrap();
    let scores: Vec<_> = held_out
        .iter()
        .map(|(p, y)| (pair_similarity(&out.state, p).unwrap(), *y))
        .collect();
    assert!(accuracy_at(&scores, tau) >= 0.9, "{}", accuracy_at(&scores, tau));
}

#[test]
fn single_class_training_is_rejected() {
    let genuine: Vec<_> = toy(4, 5).into_iter().filter(|(_, y)| y.is_genuine()).collect();
    assert!(matches!(
        train(tiny_arch(), &genuine, &loss(1), 0),
        Err(VerifierError::SingleClass)
    ));
    assert!(matches!(
        train(tiny_arch(), &[], &loss(1), 0),
        Err(VerifierError::SingleClass)
    ));
}

#[test]
fn checkpoint_reproduces_predictions() {
    let pairs = toy(5, 10);
    let out = train(tiny_arch(), &pairs, &loss(1), 6).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_checkpoint(&path, &out.state, Some(61.25)).unwrap();
    let (restored, tau) = load_checkpoint(&path).unwrap();
    assert_eq!(tau, Some(61.25));
    assert_eq!(restored, out.state);
    for (p, _) in &pairs {
        assert_eq!(
            pair_similarity(&out.state, p).unwrap(),
            pair_similarity(&restored, p).unwrap()
        );
    }
}

#[test]
fn energy_is_symmetric_and_bounded() {
    let state = EncoderState::init(tiny_arch(), 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for genuine in [true, false] {
        let (pair, _) = pair_of(random_image(&mut rng, 16), random_image(&mut rng, 16), genuine);
        let e = pair_energy(&state, &pair).unwrap();
        let swapped = pair_energy(&state, &pair.swapped()).unwrap();
        assert!((e - swapped).abs() < 1e-12);
        assert!((0.0..=2.0).contains(&e));
        let same = pair_of(pair.left.image.clone(), pair.left.image.clone(), genuine).0;
        assert!(pair_energy(&state, &same).unwrap() < 1e-12);
        assert_eq!(classify_pair(&state, &same, 99.0).unwrap(), Verdict::RealSource);
    }
}

#[test]
fn wrong_input_size_is_a_shape_error() {
    let state = EncoderState::init(tiny_arch(), 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (pair, _) = pair_of(random_image(&mut rng, 20), random_image(&mut rng, 20), true);
    assert!(matches!(
        pair_energy(&state, &pair),
        Err(VerifierError::Shape { expected: 16, got: 20 })
    ));
}

#[test]
fn evaluation_report_is_consistent() {
    let pairs = toy(6, 12);
    let out = train(tiny_arch(), &pairs, &loss(2), 1).unwrap();
    let summary = TrainingSummary::from_outcome(&out);
    let test = toy(7, 8);
    let report = evaluate_dataset(&out.state, &test, 50.0, &loss(2), &summary).unwrap();
    assert_eq!(report.model_name, "Tiny");
    assert_eq!(report.train_params, out.state.param_count());

    let sims: Vec<(f64, PairLabel)> = test
        .iter()
        .map(|(p, y)| (pair_similarity(&out.state, p).unwrap(), *y))
        .collect();
    let mean = sims.iter().map(|s| s.0).sum::<f64>() / sims.len() as f64;
    assert!((report.mean_similarity - mean).abs() < 1e-9);
    assert_eq!(report.test_accuracy, accuracy_at(&sims, 50.0));
    let genuine: Vec<f64> = sims.iter().filter(|s| s.1.is_genuine()).map(|s| s.0).collect();
    let g_mean = genuine.iter().sum::<f64>() / genuine.len() as f64;
    assert!((report.genuine_similarity.unwrap() - g_mean).abs() < 1e-9);
    assert!(report.compute_minutes >= summary.minutes);
    assert!(matches!(
        evaluate_dataset(&out.state, &[], 50.0, &loss(2), &summary),
        Err(VerifierError::EmptyDataset)
    ));
}
