//! Dense feedforward network engine: forward pass, MSE loss, hand-derived
//! reverse-mode gradients, Adam updates and a deterministic training loop.
//!
//! Everything is plain `f64` slices; no autodiff framework, no GPU. Weight
//! matrices are row-major `d_in x d_out`, so a forward step is
//! `y[j] = sum_i x[i] * w[i * d_out + j] + b[j]`.

mod adam;
mod train;

pub use adam::AdamState;
pub use train::{train, TrainConfig, TrainReport};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Direction, NormStats, Parameter};
use crate::error::{Error, Result};

/// Hidden-layer activation. The output layer is always linear.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Tanh,
}

impl Activation {
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative with respect to the pre-activation.
    #[inline]
    pub fn derivative(&self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => {
                let t = pre.tanh();
                1.0 - t * t
            }
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            other => Err(Error::InvalidArg(format!(
                "unknown activation {other:?} (expected relu|tanh)"
            ))),
        }
    }
}

/// Layer widths `[d0, d1, ..., dk]` plus the hidden activation. `d0` is the
/// input dimension, `dk` the output dimension, and k >= 1 weight layers sit
/// between them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Architecture {
    widths: Vec<usize>,
    pub activation: Activation,
}

impl Architecture {
    pub fn new(widths: Vec<usize>, activation: Activation) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::InvalidArg(format!(
                "architecture needs input and output widths, got {widths:?}"
            )));
        }
        if widths.contains(&0) {
            return Err(Error::InvalidArg(format!(
                "every layer width must be >= 1, got {widths:?}"
            )));
        }
        Ok(Architecture { widths, activation })
    }

    /// `depth` weight layers of uniform hidden width between `d_in` and `d_out`.
    pub fn uniform(
        d_in: usize,
        hidden: usize,
        depth: usize,
        d_out: usize,
        activation: Activation,
    ) -> Result<Self> {
        if depth == 0 {
            return Err(Error::InvalidArg("depth must be >= 1".into()));
        }
        let mut widths = Vec::with_capacity(depth + 1);
        widths.push(d_in);
        widths.extend(std::iter::repeat_n(hidden, depth - 1));
        widths.push(d_out);
        Architecture::new(widths, activation)
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.widths.last().unwrap()
    }

    /// Number of weight layers (count of weight matrices).
    pub fn weight_layers(&self) -> usize {
        self.widths.len() - 1
    }

    /// Total trainable scalars: sum over layers of `d_in * d_out + d_out`.
    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }
}

/// Free-function form of [`Architecture::param_count`].
pub fn param_count(arch: &Architecture) -> usize {
    arch.param_count()
}

/// One weight matrix (row-major, `d_in x d_out`) and its bias vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

impl LayerWeights {
    fn zeros_like(arch: &Architecture) -> Vec<LayerWeights> {
        arch.widths()
            .windows(2)
            .map(|d| LayerWeights {
                w: vec![0.0; d[0] * d[1]],
                b: vec![0.0; d[1]],
            })
            .collect()
    }

    pub fn is_finite(&self) -> bool {
        self.w.iter().chain(self.b.iter()).all(|v| v.is_finite())
    }
}

/// Input/output normalization carried with a trained model so that raw
/// profiles can be mapped in and predictions mapped back out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStatsPair {
    pub input: NormStats,
    pub output: NormStats,
}

impl NormStatsPair {
    pub fn symmetric(stats: NormStats) -> Self {
        NormStatsPair {
            input: stats,
            output: stats,
        }
    }
}

/// A fully materialized network: weights, biases, normalization and the
/// provenance needed to serialize or retrain it.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelWeights {
    pub arch: Architecture,
    pub layers: Vec<LayerWeights>,
    pub parameter: Parameter,
    pub direction: Direction,
    pub norm_stats: NormStatsPair,
    pub seed: u64,
    pub trained_epochs: u32,
}

impl ModelWeights {
    /// Glorot-uniform initialization from a seeded generator: every weight
    /// is drawn from +-sqrt(6 / (fan_in + fan_out)), biases start at zero.
    pub fn initialize(
        arch: Architecture,
        parameter: Parameter,
        direction: Direction,
        norm_stats: NormStatsPair,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = arch
            .widths()
            .windows(2)
            .map(|d| {
                let (fan_in, fan_out) = (d[0], d[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                LayerWeights {
                    w: (0..fan_in * fan_out)
                        .map(|_| rng.random_range(-limit..limit))
                        .collect(),
                    b: vec![0.0; fan_out],
                }
            })
            .collect();
        ModelWeights {
            arch,
            layers,
            parameter,
            direction,
            norm_stats,
            seed,
            trained_epochs: 0,
        }
    }

    pub fn sequence_len(&self) -> usize {
        self.arch.input_dim()
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(LayerWeights::is_finite)
    }

    /// Number of scalar entries across all matrices and vectors.
    pub fn scalar_count(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// Forward pass. Hidden layers apply the architecture's activation, the
    /// output layer is linear. Pure: no state is touched.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.arch.input_dim() {
            return Err(Error::InputShape {
                expected: self.arch.input_dim(),
                got: x.len(),
            });
        }
        let k = self.layers.len();
        let mut current = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let d_out = self.arch.widths()[i + 1];
            let mut next = layer.b.clone();
            for (m, &a) in current.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let row = &layer.w[m * d_out..(m + 1) * d_out];
                for (j, &w) in row.iter().enumerate() {
                    next[j] += a * w;
                }
            }
            if i + 1 < k {
                for v in &mut next {
                    *v = self.arch.activation.apply(*v);
                }
            }
            current = next;
        }
        Ok(current)
    }
}

/// Non-negative minibatch MSE.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LossValue(f64);

impl LossValue {
    pub fn value(&self) -> f64 {
        self.0
    }
}

impl std::fmt::Display for LossValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Mean squared error between two equal-length vectors.
pub fn loss_mse(pred: &[f64], target: &[f64]) -> Result<LossValue> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::LengthMismatch {
            left: pred.len(),
            right: target.len(),
        });
    }
    let sum: f64 = pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(LossValue(sum / pred.len() as f64))
}

/// Per-layer loss gradients, same shapes as the model's layers.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub layers: Vec<LayerWeights>,
}

impl Gradients {
    pub fn zeros(arch: &Architecture) -> Self {
        Gradients {
            layers: LayerWeights::zeros_like(arch),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(LayerWeights::is_finite)
    }

    /// Accumulate `other`, scaled. Used to average per-sample gradients
    /// over a minibatch.
    pub fn add_scaled(&mut self, other: &Gradients, factor: f64) {
        for (dst, src) in self.layers.iter_mut().zip(&other.layers) {
            for (d, s) in dst.w.iter_mut().zip(&src.w) {
                *d += s * factor;
            }
            for (d, s) in dst.b.iter_mut().zip(&src.b) {
                *d += s * factor;
            }
        }
    }
}

/// Exact reverse-mode gradients of `loss_mse(forward(model, x), target)`
/// with respect to every weight and bias. Returns the loss as well, since
/// the forward activations are already in hand.
pub fn backward(model: &ModelWeights, x: &[f64], target: &[f64]) -> Result<(Gradients, LossValue)> {
    let widths = model.arch.widths();
    if x.len() != widths[0] {
        return Err(Error::InputShape {
            expected: widths[0],
            got: x.len(),
        });
    }
    if target.len() != model.arch.output_dim() {
        return Err(Error::InputShape {
            expected: model.arch.output_dim(),
            got: target.len(),
        });
    }

    let k = model.layers.len();
    // Forward, keeping pre-activations and activations per layer.
    let mut activations: Vec<Vec<f64>> = Vec::with_capacity(k + 1);
    let mut pre_activations: Vec<Vec<f64>> = Vec::with_capacity(k);
    activations.push(x.to_vec());
    for (i, layer) in model.layers.iter().enumerate() {
        let d_out = widths[i + 1];
        let mut pre = layer.b.clone();
        for (m, &a) in activations[i].iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let row = &layer.w[m * d_out..(m + 1) * d_out];
            for (j, &w) in row.iter().enumerate() {
                pre[j] += a * w;
            }
        }
        let act = if i + 1 < k {
            pre.iter()
                .map(|&v| model.arch.activation.apply(v))
                .collect()
        } else {
            pre.clone()
        };
        pre_activations.push(pre);
        activations.push(act);
    }

    let output = &activations[k];
    let loss = loss_mse(output, target)?;

    // delta = dL/d(pre-activation of the current layer)
    let n = target.len() as f64;
    let mut delta: Vec<f64> = output
        .iter()
        .zip(target)
        .map(|(y, t)| 2.0 * (y - t) / n)
        .collect();

    let mut grads = Gradients::zeros(&model.arch);
    for i in (0..k).rev() {
        let d_out = widths[i + 1];
        let input = &activations[i];
        let layer_grad = &mut grads.layers[i];
        for (m, &a) in input.iter().enumerate() {
            if a != 0.0 {
                let row = &mut layer_grad.w[m * d_out..(m + 1) * d_out];
                for (j, &d) in delta.iter().enumerate() {
                    row[j] = a * d;
                }
            }
        }
        layer_grad.b.copy_from_slice(&delta);

        if i > 0 {
            let weights = &model.layers[i].w;
            let mut prev_delta = vec![0.0; widths[i]];
            for (m, pd) in prev_delta.iter_mut().enumerate() {
                let row = &weights[m * d_out..(m + 1) * d_out];
                let mut sum = 0.0;
                for (j, &d) in delta.iter().enumerate() {
                    sum += row[j] * d;
                }
                *pd = sum * model.arch.activation.derivative(pre_activations[i - 1][m]);
            }
            delta = prev_delta;
        }
    }

    Ok((grads, loss))
}
