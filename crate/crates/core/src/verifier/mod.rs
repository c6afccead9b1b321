//! Siamese verification of left/right iris pairs.
//!
//! Both crops of a pair go through one [`EncoderState`]; the Euclidean distance
//! `E` between their unit embeddings is the energy, mapped onto a percentage
//! similarity `100·(1 − E/2)`.

mod checkpoint;
mod encoder;
mod threshold;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_FORMAT_VERSION};
pub use encoder::{Activations, Architecture, EncoderState};
pub use threshold::{select_threshold, select_threshold_from_scores};
pub use train::{train, EpochStats, TrainOutcome};

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{IrisCrop, IrisPair, PairLabel};

const DISTANCE_SLACK: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum VerifierError {
    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("distance {0} outside [0, 2]")]
    Domain(f64),
    #[error("need pairs of both labels")]
    SingleClass,
    #[error("empty dataset")]
    EmptyDataset,
    #[error("invalid architecture: {0}")]
    Architecture(String),
    #[error("invalid loss config: {0}")]
    Config(String),
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint format: {0}")]
    Format(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Optimizer {
    Sgd,
    Adaptive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    pub margin: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub optimizer: Optimizer,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            margin: 1.0,
            batch_size: 32,
            learning_rate: 1e-3,
            epochs: 10,
            optimizer: Optimizer::Adaptive,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<(), VerifierError> {
        if !(self.margin > 0.0 && self.margin <= 2.0) {
            return Err(VerifierError::Config(format!(
                "margin must lie in (0, 2], got {}",
                self.margin
            )));
        }
        if self.batch_size == 0 {
            return Err(VerifierError::Config("batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(VerifierError::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// Decision for one pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    RealSource,
    GanSource,
}

pub fn encode(state: &EncoderState, crop: &IrisCrop) -> Result<Vec<f64>, VerifierError> {
    let input = state.prepare_input(crop)?;
    Ok(state.embed_input(&input))
}

/// Euclidean energy between two embeddings.
pub fn pair_distance(e1: &[f64], e2: &[f64]) -> Result<f64, VerifierError> {
    if e1.len() != e2.len() {
        return Err(VerifierError::Shape {
            expected: e1.len(),
            got: e2.len(),
        });
    }
    Ok(e1
        .iter()
        .zip(e2)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt())
}

/// `100·(1 − E/2)` for `E` in `[0, 2]`; values within 1e-6 outside the range are clamped.
pub fn similarity_percent(distance: f64) -> Result<f64, VerifierError> {
    if !(-DISTANCE_SLACK..=2.0 + DISTANCE_SLACK).contains(&distance) {
        return Err(VerifierError::Domain(distance));
    }
    Ok(100.0 * (1.0 - distance.clamp(0.0, 2.0) / 2.0))
}

/// `y·E² + (1 − y)·max(0, m − E)²`.
pub fn contrastive_loss(distance: f64, y: PairLabel, cfg: &LossConfig) -> f64 {
    if y.is_genuine() {
        distance * distance
    } else {
        let gap = (cfg.margin - distance).max(0.0);
        gap * gap
    }
}

/// `d loss / d E`, with the zero subgradient at the margin.
pub(crate) fn loss_slope(distance: f64, y: PairLabel, cfg: &LossConfig) -> f64 {
    if y.is_genuine() {
        2.0 * distance
    } else if distance < cfg.margin {
        -2.0 * (cfg.margin - distance)
    } else {
        0.0
    }
}

/// Loss, energy and parameter gradient for one prepared input pair.
pub struct PairGradient {
    pub loss: f64,
    pub distance: f64,
    pub grad: Vec<f64>,
}

pub(crate) fn pair_loss_and_grad(
    state: &EncoderState,
    left: &[f64],
    right: &[f64],
    y: PairLabel,
    cfg: &LossConfig,
    grad: &mut [f64],
) -> (f64, f64) {
    let a = state.forward(left);
    let b = state.forward(right);
    let distance = pair_distance(a.embedding(), b.embedding()).expect("shared encoder");
    let loss = contrastive_loss(distance, y, cfg);
    let slope = loss_slope(distance, y, cfg);
    if slope != 0.0 && distance > 0.0 {
        let d_a: Vec<f64> = a
            .embedding()
            .iter()
            .zip(b.embedding())
            .map(|(u, v)| slope * (u - v) / distance)
            .collect();
        let d_b: Vec<f64> = d_a.iter().map(|g| -g).collect();
        state.backward(&a, &d_a, grad);
        state.backward(&b, &d_b, grad);
    }
    (loss, distance)
}

/// Gradient of the contrastive loss of one pair with respect to the shared weights.
pub fn loss_gradient(
    state: &EncoderState,
    pair: &IrisPair,
    y: PairLabel,
    cfg: &LossConfig,
) -> Result<PairGradient, VerifierError> {
    let left = state.prepare_input(&pair.left)?;
    let right = state.prepare_input(&pair.right)?;
    let mut grad = vec![0.0; state.param_count()];
    let (loss, distance) = pair_loss_and_grad(state, &left, &right, y, cfg, &mut grad);
    Ok(PairGradient {
        loss,
        distance,
        grad,
    })
}

/// Energy of a pair under the shared encoder.
pub fn pair_energy(state: &EncoderState, pair: &IrisPair) -> Result<f64, VerifierError> {
    pair_distance(&encode(state, &pair.left)?, &encode(state, &pair.right)?)
}

pub fn pair_similarity(state: &EncoderState, pair: &IrisPair) -> Result<f64, VerifierError> {
    similarity_percent(pair_energy(state, pair)?)
}

/// REAL_SOURCE iff the similarity reaches `threshold` percent.
pub fn classify_pair(
    state: &EncoderState,
    pair: &IrisPair,
    threshold: f64,
) -> Result<Verdict, VerifierError> {
    Ok(verdict_for(pair_similarity(state, pair)?, threshold))
}

pub fn verdict_for(similarity: f64, threshold: f64) -> Verdict {
    if similarity >= threshold {
        Verdict::RealSource
    } else {
        Verdict::GanSource
    }
}

/// Fraction of `(similarity, label)` scores classified correctly at `threshold`.
pub fn accuracy_at(scores: &[(f64, PairLabel)], threshold: f64) -> f64 {
    if scores.is_empty() {
        return 0.0;
    }
    let correct = scores
        .iter()
        .filter(|(s, y)| (verdict_for(*s, threshold) == Verdict::RealSource) == y.is_genuine())
        .count();
    correct as f64 / scores.len() as f64
}

/// One row of the model comparison table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_name: String,
    pub train_params: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub compute_minutes: f64,
    pub test_loss: f64,
    pub test_accuracy: f64,
    pub mean_similarity: f64,
    /// Mean similarity over genuine (label 1) pairs, when any are present.
    #[serde(default)]
    pub genuine_similarity: Option<f64>,
    /// Mean similarity over synthetic (label 0) pairs, when any are present.
    #[serde(default)]
    pub synthetic_similarity: Option<f64>,
    #[serde(default)]
    pub threshold: f64,
}

/// Training-side figures carried into a report row.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingSummary {
    pub loss: f64,
    pub accuracy: f64,
    pub minutes: f64,
}

impl TrainingSummary {
    pub fn from_outcome(outcome: &TrainOutcome) -> Self {
        let last = outcome.history.last();
        Self {
            loss: last.map_or(0.0, |e| e.mean_loss),
            accuracy: last.map_or(0.0, |e| e.accuracy),
            minutes: outcome.elapsed.as_secs_f64() / 60.0,
        }
    }
}

/// Test loss, accuracy at `threshold` and mean similarity over `pairs`.
///
/// `compute_minutes` is training time plus the time spent here.
pub fn evaluate_dataset(
    state: &EncoderState,
    pairs: &[(IrisPair, PairLabel)],
    threshold: f64,
    loss_cfg: &LossConfig,
    training: &TrainingSummary,
) -> Result<EvalReport, VerifierError> {
    if pairs.is_empty() {
        return Err(VerifierError::EmptyDataset);
    }
    let started = Instant::now();
    let mut scores = Vec::with_capacity(pairs.len());
    let mut loss_sum = 0.0;
    for (pair, y) in pairs {
        let e = pair_energy(state, pair)?;
        loss_sum += contrastive_loss(e, *y, loss_cfg);
        scores.push((similarity_percent(e)?, *y));
    }
    let mean_of = |pred: &dyn Fn(PairLabel) -> bool| {
        let picked: Vec<f64> = scores.iter().filter(|(_, y)| pred(*y)).map(|(s, _)| *s).collect();
        (!picked.is_empty()).then(|| picked.iter().sum::<f64>() / picked.len() as f64)
    };
    let n = scores.len() as f64;
    Ok(EvalReport {
        model_name: state.arch.name.clone(),
        train_params: state.param_count(),
        train_loss: training.loss,
        train_accuracy: training.accuracy,
        compute_minutes: training.minutes + started.elapsed().as_secs_f64() / 60.0,
        test_loss: loss_sum / n,
        test_accuracy: accuracy_at(&scores, threshold),
        mean_similarity: scores.iter().map(|(s, _)| s).sum::<f64>() / n,
        genuine_similarity: mean_of(&|y| y.is_genuine()),
        synthetic_similarity: mean_of(&|y| !y.is_genuine()),
        threshold,
    })
}
