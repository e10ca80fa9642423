//! Seeded minibatch training loop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::AlignedPair;
use crate::error::{Error, Result};
use crate::nn::{backward, AdamState, Architecture, Gradients, ModelWeights, NormStatsPair};

/// Optimizer and loop settings. Defaults follow the usual Adam values
/// (lr 1e-3, beta1 0.9, beta2 0.999, eps 1e-8) with 400 full-training
/// epochs and minibatches of 16.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 400,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            batch_size: 16,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidArg("epochs must be >= 1".into()));
        }
        // lr 0 is allowed: it freezes the model at its initialization.
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::InvalidArg(format!(
                "learning rate must be a finite non-negative number, got {}",
                self.learning_rate
            )));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::InvalidArg(format!(
                    "{name} must be in [0, 1), got {beta}"
                )));
            }
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidArg("batch size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Trained model plus the mean training MSE recorded per epoch.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: ModelWeights,
    pub loss_history: Vec<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        *self.loss_history.last().unwrap()
    }
}

/// Train a network on aligned pairs. Weight init, per-epoch shuffling and
/// batching all derive from `cfg.seed`, so identical inputs give bitwise
/// identical models. Losses are recorded before each update and averaged
/// per epoch; a non-finite loss aborts with the offending epoch and batch.
pub fn train(
    arch: &Architecture,
    pairs: &[AlignedPair],
    cfg: &TrainConfig,
    norm_stats: &NormStatsPair,
) -> Result<TrainReport> {
    cfg.validate()?;
    let first = pairs
        .first()
        .ok_or_else(|| Error::InvalidArg("training needs at least one pair".into()))?;
    for pair in pairs {
        if pair.input.len() != arch.input_dim() {
            return Err(Error::InputShape {
                expected: arch.input_dim(),
                got: pair.input.len(),
            });
        }
        if pair.target.len() != arch.output_dim() {
            return Err(Error::InputShape {
                expected: arch.output_dim(),
                got: pair.target.len(),
            });
        }
        if pair.parameter != first.parameter || pair.direction != first.direction {
            return Err(Error::InvalidArg(
                "training pairs must share one parameter and one direction".into(),
            ));
        }
    }

    let mut model = ModelWeights::initialize(
        arch.clone(),
        first.parameter,
        first.direction,
        *norm_stats,
        cfg.seed,
    );
    let mut adam = AdamState::new(arch);
    // Shuffling continues the init stream: one seed drives the whole run.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));

    let mut indices: Vec<usize> = (0..pairs.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        indices.shuffle(&mut rng);
        let mut epoch_loss_sum = 0.0;
        for (batch_no, batch) in indices.chunks(cfg.batch_size).enumerate() {
            let mut batch_grads = Gradients::zeros(arch);
            let mut batch_loss = 0.0;
            let weight = 1.0 / batch.len() as f64;
            for &idx in batch {
                let pair = &pairs[idx];
                let (grads, loss) = backward(&model, &pair.input, &pair.target)?;
                batch_grads.add_scaled(&grads, weight);
                batch_loss += loss.value() * weight;
            }
            if !batch_loss.is_finite() {
                return Err(Error::Diverged {
                    epoch,
                    batch: batch_no,
                });
            }
            epoch_loss_sum += batch_loss * batch.len() as f64;
            adam.step(&mut model, &batch_grads, cfg)
                .map_err(|e| match e {
                    Error::NonFiniteGradient { .. } => Error::Diverged {
                        epoch,
                        batch: batch_no,
                    },
                    other => other,
                })?;
        }
        history.push(epoch_loss_sum / pairs.len() as f64);
    }

    model.trained_epochs = cfg.epochs as u32;
    Ok(TrainReport {
        model,
        loss_history: history,
    })
}
