//! Adam with bias correction.

use crate::error::{Error, Result};
use crate::nn::{Architecture, Gradients, LayerWeights, ModelWeights, TrainConfig};

/// First/second moment accumulators plus the step counter.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<LayerWeights>,
    v: Vec<LayerWeights>,
    t: u64,
}

impl AdamState {
    pub fn new(arch: &Architecture) -> Self {
        AdamState {
            m: Gradients::zeros(arch).layers,
            v: Gradients::zeros(arch).layers,
            t: 0,
        }
    }

    pub fn timestep(&self) -> u64 {
        self.t
    }

    /// One Adam update:
    ///
    /// ```text
    /// m <- b1*m + (1-b1)*g        v <- b2*v + (1-b2)*g^2
    /// m_hat = m / (1 - b1^t)      v_hat = v / (1 - b2^t)
    /// w <- w - lr * m_hat / (sqrt(v_hat) + eps)
    /// ```
    ///
    /// The step counter is incremented first, so the initial call uses t = 1.
    /// Non-finite gradients or weights abort with a divergence error.
    pub fn step(
        &mut self,
        model: &mut ModelWeights,
        grads: &Gradients,
        cfg: &TrainConfig,
    ) -> Result<()> {
        if !grads.is_finite() {
            return Err(Error::NonFiniteGradient { step: self.t + 1 });
        }
        self.t += 1;
        let t = self.t as i32;
        let m_corr = 1.0 - cfg.beta1.powi(t);
        let v_corr = 1.0 - cfg.beta2.powi(t);

        for ((layer, grad), (m, v)) in model
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            update_slice(
                &mut layer.w,
                &grad.w,
                &mut m.w,
                &mut v.w,
                cfg,
                m_corr,
                v_corr,
            );
            update_slice(
                &mut layer.b,
                &grad.b,
                &mut m.b,
                &mut v.b,
                cfg,
                m_corr,
                v_corr,
            );
        }

        if !model.is_finite() {
            return Err(Error::NonFiniteGradient { step: self.t });
        }
        Ok(())
    }
}

fn update_slice(
    weights: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    cfg: &TrainConfig,
    m_corr: f64,
    v_corr: f64,
) {
    for i in 0..weights.len() {
        let g = grads[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[i] / m_corr;
        let v_hat = v[i] / v_corr;
        weights[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
}
