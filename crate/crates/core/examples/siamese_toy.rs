//! Trains a small shared-weight encoder on toy pairs and scores held-out pairs.

use iris_forensics::dataset::{generate_toy_corpus, ToyCorpusConfig};
use iris_forensics::verifier::{
    accuracy_at, pair_similarity, select_threshold, train, Architecture, LossConfig,
};

fn main() {
    let corpus = |seed| {
        let mut cfg = ToyCorpusConfig::new(60, 60, 0.5, 0.02, seed);
        cfg.crop_size = 32;
        generate_toy_corpus(&cfg)
    };
    let (train_set, val_set, test_set) = (corpus(1), corpus(2), corpus(3));
    let loss = LossConfig {
        epochs: 4,
        batch_size: 16,
        ..LossConfig::default()
    };
    let arch = Architecture::custom("SmallConv", 32, vec![8, 16, 32], 32);
    let out = train(arch, &train_set, &loss, 0).expect("two classes");
    for e in &out.history {
        println!("epoch {}  loss {:.4}  accuracy {:.3}", e.epoch, e.mean_loss, e.accuracy);
    }
    let tau = select_threshold(&out.state, &val_set).unwrap();
    let scores: Vec<_> = test_set
        .iter()
        .map(|(p, y)| (pair_similarity(&out.state, p).unwrap(), *y))
        .collect();
    let mean = |genuine: bool| {
        let v: Vec<f64> = scores.iter().filter(|s| s.1.is_genuine() == genuine).map(|s| s.0).collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    println!("threshold {tau:.2}%  test accuracy {:.3}", accuracy_at(&scores, tau));
    println!("mean similarity: real {:.2}%  gan {:.2}%", mean(true), mean(false));
}
