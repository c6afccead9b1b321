use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    accuracy_at, pair_loss_and_grad, select_threshold_from_scores, similarity_percent,
    Architecture, EncoderState, LossConfig, Optimizer, VerifierError,
};
use crate::types::{IrisPair, PairLabel};

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub mean_loss: f64,
    /// Pair accuracy at `threshold`, chosen on this epoch's similarities.
    pub accuracy: f64,
    pub threshold: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub state: EncoderState,
    pub history: Vec<EpochStats>,
    pub elapsed: Duration,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(n: usize) -> Self {
        Self {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - ADAM_BETA1.powi(self.t);
        let c2 = 1.0 - ADAM_BETA2.powi(self.t);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grad)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = ADAM_BETA1 * *m + (1.0 - ADAM_BETA1) * g;
            *v = ADAM_BETA2 * *v + (1.0 - ADAM_BETA2) * g * g;
            *p -= lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
        }
    }
}

/// Mini-batch training of the shared encoder on the contrastive loss.
///
/// Runs on one worker; given the same seed and data the final weights are
/// bit-identical across runs.
pub fn train(
    arch: Architecture,
    pairs: &[(IrisPair, PairLabel)],
    cfg: &LossConfig,
    seed: u64,
) -> Result<TrainOutcome, VerifierError> {
    cfg.validate()?;
    let genuine = pairs.iter().filter(|(_, y)| y.is_genuine()).count();
    if genuine == 0 || genuine == pairs.len() {
        return Err(VerifierError::SingleClass);
    }
    let started = Instant::now();
    let mut state = EncoderState::init(arch, seed)?;
    let inputs = pairs
        .iter()
        .map(|(pair, y)| {
            Ok((
                state.prepare_input(&pair.left)?,
                state.prepare_input(&pair.right)?,
                *y,
            ))
        })
        .collect::<Result<Vec<_>, VerifierError>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut adam = Adam::new(state.param_count());
    let mut grad = vec![0.0; state.param_count()];
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut scores = Vec::with_capacity(inputs.len());
        for batch in order.chunks(cfg.batch_size) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for &i in batch {
                let (left, right, y) = &inputs[i];
                let (loss, distance) = pair_loss_and_grad(&state, left, right, *y, cfg, &mut grad);
                loss_sum += loss;
                scores.push((similarity_percent(distance.min(2.0))?, *y));
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            match cfg.optimizer {
                Optimizer::Adaptive => adam.step(&mut state.params, &grad, cfg.learning_rate),
                Optimizer::Sgd => {
                    for (p, g) in state.params.iter_mut().zip(&grad) {
                        *p -= cfg.learning_rate * g;
                    }
                }
            }
        }
        let threshold = select_threshold_from_scores(&scores)?;
        let stats = EpochStats {
            epoch,
            mean_loss: loss_sum / inputs.len() as f64,
            accuracy: accuracy_at(&scores, threshold),
            threshold,
        };
        log::debug!(
            "epoch {} loss {:.4} acc {:.4} tau {:.2}",
            stats.epoch,
            stats.mean_loss,
            stats.accuracy,
            stats.threshold
        );
        history.push(stats);
    }
    Ok(TrainOutcome {
        state,
        history,
        elapsed: started.elapsed(),
    })
}
