use serde::{Deserialize, Serialize};

use super::mlp::{Gradients, Mlp};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Global-norm gradient clip applied before the moment update.
    pub clip_norm: Option<f64>,
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        Self { learning_rate, ..Self::default() }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8, clip_norm: Some(10.0) }
    }
}

/// Adam moments for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
    pub step: u64,
}

impl AdamState {
    pub fn new(config: AdamConfig, net: &Mlp) -> Self {
        let zeros: Vec<Vec<f64>> = net.trainable().iter().map(|t| vec![0.0; t.len()]).collect();
        Self { config, first: zeros.clone(), second: zeros, step: 0 }
    }

    /// Pads the moment buffers with zeros after a network grew in place.
    pub fn resize_for(&mut self, net: &Mlp) {
        for ((m, v), t) in self.first.iter_mut().zip(self.second.iter_mut()).zip(net.trainable()) {
            m.resize(t.len(), 0.0);
            v.resize(t.len(), 0.0);
        }
    }

    /// One bias-corrected Adam update of `net` using `grads`.
    pub fn apply(&mut self, net: &mut Mlp, grads: &Gradients) -> Result<()> {
        let params = net.trainable_mut();
        self.apply_tensors(params, grads)
    }

    /// Adam over an explicit tensor list; `grads` must match it tensor for tensor.
    pub fn apply_tensors(&mut self, params: Vec<&mut [f64]>, grads: &Gradients) -> Result<()> {
        if params.len() != grads.0.len() || params.len() != self.first.len() {
            return Err(Error::Shape(format!(
                "{} parameter tensors, {} gradient tensors, {} moment tensors",
                params.len(),
                grads.0.len(),
                self.first.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(&grads.0).enumerate() {
            if p.len() != g.len() || p.len() != self.first[i].len() {
                return Err(Error::Shape(format!("tensor {i} length mismatch")));
            }
        }
        let c = self.config;
        let clip = match c.clip_norm {
            Some(max) => {
                let norm = grads.global_norm();
                if norm > max {
                    max / norm
                } else {
                    1.0
                }
            }
            None => 1.0,
        };
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - c.beta1.powi(t);
        let bc2 = 1.0 - c.beta2.powi(t);
        for (i, (p, g)) in params.into_iter().zip(&grads.0).enumerate() {
            let (m, v) = (&mut self.first[i], &mut self.second[i]);
            for j in 0..p.len() {
                let gj = g[j] * clip;
                m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * gj;
                v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * gj * gj;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p[j] -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
            }
        }
        Ok(())
    }
}
