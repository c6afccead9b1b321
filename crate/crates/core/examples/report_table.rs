//! Renders a model comparison table from evaluation rows.

use iris_forensics::report::render_report;
use iris_forensics::verifier::EvalReport;

fn row(name: &str, params: usize, acc: f64, sim: f64) -> EvalReport {
    EvalReport {
        model_name: name.into(),
        train_params: params,
        train_loss: 0.12,
        train_accuracy: acc + 0.01,
        compute_minutes: params as f64 / 1.0e6,
        test_loss: 0.13,
        test_accuracy: acc,
        mean_similarity: sim,
        genuine_similarity: None,
        synthetic_similarity: None,
        threshold: 50.0,
    }
}

fn main() {
    let rows = [
        row("SmallConv", 1_234_567, 0.9712, 71.5),
        row("Wide", 23_500_000, 0.9821, 74.25),
    ];
    println!("{}", render_report(&rows).unwrap());
}
