use serde::{Deserialize, Serialize};

use super::model::SageModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias correction; moments mirror the model's parameter layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub config: AdamConfig,
    pub step: u64,
    pub m: SageModel,
    pub v: SageModel,
}

impl Adam {
    pub fn new(model: &SageModel, config: AdamConfig) -> Self {
        Self {
            config,
            step: 0,
            m: model.zeros_like(),
            v: model.zeros_like(),
        }
    }

    pub fn update(&mut self, model: &mut SageModel, grads: &SageModel, lr: f64) {
        self.step += 1;
        let AdamConfig { beta1, beta2, eps } = self.config;
        let c1 = 1.0 - beta1.powi(self.step as i32);
        let c2 = 1.0 - beta2.powi(self.step as i32);
        let grads = grads.tensors();
        let mut ms = self.m.tensors_mut();
        let mut vs = self.v.tensors_mut();
        for (((_, p), (_, g)), ((_, m), (_, v))) in model
            .tensors_mut()
            .into_iter()
            .zip(grads)
            .zip(ms.iter_mut().zip(vs.iter_mut()))
        {
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let mh = m[i] / c1;
                let vh = v[i] / c2;
                p[i] -= lr * mh / (vh.sqrt() + eps);
            }
        }
    }
}

/// `base * (1 + cos(pi * t / t_max)) / 2`, with `t` counted from zero.
pub fn cosine_lr(base: f64, t: usize, t_max: usize) -> Result<f64> {
    if t_max == 0 {
        return Err(Error::Schedule("cosine period must be positive".into()));
    }
    if t > t_max {
        return Err(Error::Schedule(format!("step {t} beyond period {t_max}")));
    }
    Ok(base * 0.5 * (1.0 + (std::f64::consts::PI * t as f64 / t_max as f64).cos()))
}

/// Tracks the lowest validation loss; signals a stop after `patience`
/// consecutive epochs without strict improvement.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyStopping {
    pub patience: usize,
    best: f64,
    best_epoch: usize,
    since: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        Self {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            since: 0,
        }
    }

    /// Returns whether `val_loss` improved on the best so far.
    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> bool {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.since = 0;
            true
        } else {
            self.since += 1;
            false
        }
    }

    pub fn should_stop(&self) -> bool {
        self.since >= self.patience
    }

    pub fn best(&self) -> Option<(usize, f64)> {
        self.best.is_finite().then_some((self.best_epoch, self.best))
    }

    pub fn epochs_since_best(&self) -> usize {
        self.since
    }
}
