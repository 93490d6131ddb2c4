use ndarray::{ArrayD, Zip};
use serde::{Deserialize, Serialize};

use super::params::Params;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam with one pair of moment tensors per parameter tensor.
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    first: Vec<ArrayD<f64>>,
    second: Vec<ArrayD<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &Params) -> Self {
        let zeros: Vec<ArrayD<f64>> = params.named().iter().map(|(_, t)| ArrayD::zeros(t.raw_dim())).collect();
        Self {
            config,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    /// Moment tensors, in parameter order.
    pub fn moments(&self) -> impl Iterator<Item = (&ArrayD<f64>, &ArrayD<f64>)> {
        self.first.iter().zip(&self.second)
    }

    /// One update. Tensors whose name fails `trainable` are left untouched.
    pub fn step(&mut self, params: &mut Params, grads: &Params, trainable: impl Fn(&str) -> bool) {
        self.step += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        let grads = grads.named();
        for (i, (name, mut p)) in params.named_mut().into_iter().enumerate() {
            if !trainable(&name) {
                continue;
            }
            let g = &grads[i].1;
            Zip::from(&mut p)
                .and(g)
                .and(&mut self.first[i])
                .and(&mut self.second[i])
                .for_each(|p, &g, m, v| {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + eps);
                });
        }
    }
}
