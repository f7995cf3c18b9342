use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ParamStore;
use crate::autodiff::Gradient;
use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.5,
            beta2: 0.9,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmsPropConfig {
    pub lr: f64,
    pub decay: f64,
    pub eps: f64,
}

impl Default for RmsPropConfig {
    fn default() -> Self {
        Self {
            lr: 5e-5,
            decay: 0.9,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OptimizerConfig {
    Adam(AdamConfig),
    RmsProp(RmsPropConfig),
}

/// First-order optimizer with per-parameter state, created lazily.
#[derive(Debug, Clone)]
pub struct Optimizer<T: Real = f64> {
    config: OptimizerConfig,
    steps: u64,
    first: BTreeMap<String, Tensor<T>>,
    second: BTreeMap<String, Tensor<T>>,
}

impl<T: Real> Optimizer<T> {
    pub fn new(config: OptimizerConfig) -> Self {
        Self {
            config,
            steps: 0,
            first: BTreeMap::new(),
            second: BTreeMap::new(),
        }
    }

    pub fn adam(config: AdamConfig) -> Self {
        Self::new(OptimizerConfig::Adam(config))
    }

    pub fn rmsprop(config: RmsPropConfig) -> Self {
        Self::new(OptimizerConfig::RmsProp(config))
    }

    pub fn config(&self) -> OptimizerConfig {
        self.config
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Applies one update to every trainable tensor. `grads` must cover
    /// exactly the trainable names.
    pub fn step(&mut self, params: &mut ParamStore<T>, grads: &Gradient<T>) -> Result<()> {
        if grads.len() != params.trainable().len() {
            return Err(Error::Shape(format!(
                "gradient has {} tensors, parameters have {}",
                grads.len(),
                params.trainable().len()
            )));
        }
        for (name, p) in params.trainable() {
            let g = grads
                .get(name)
                .ok_or_else(|| Error::Shape(format!("no gradient for `{name}`")))?;
            if g.shape() != p.shape() {
                return Err(Error::Shape(format!(
                    "gradient for `{name}` has shape {:?}, parameter {:?}",
                    g.shape(),
                    p.shape()
                )));
            }
        }
        self.steps += 1;
        let t = self.steps as i32;
        for (name, p) in params.trainable_mut().iter_mut() {
            let g = grads.get(name).expect("checked").data();
            let zeros = || Tensor::zeros(p.shape());
            let m = self.first.entry(name.clone()).or_insert_with(zeros);
            match self.config {
                OptimizerConfig::Adam(c) => {
                    let v = self.second.entry(name.clone()).or_insert_with(zeros);
                    let (b1, b2) = (T::from_f64(c.beta1), T::from_f64(c.beta2));
                    let c1 = T::from_f64(1.0 - c.beta1.powi(t));
                    let c2 = T::from_f64(1.0 - c.beta2.powi(t));
                    let (lr, eps) = (T::from_f64(c.lr), T::from_f64(c.eps));
                    let one = T::one();
                    let (pd, md, vd) = (p.data_mut(), m.data_mut(), v.data_mut());
                    for k in 0..pd.len() {
                        md[k] = b1 * md[k] + (one - b1) * g[k];
                        vd[k] = b2 * vd[k] + (one - b2) * g[k] * g[k];
                        let m_hat = md[k] / c1;
                        let v_hat = vd[k] / c2;
                        pd[k] -= lr * m_hat / (v_hat.sqrt() + eps);
                    }
                }
                OptimizerConfig::RmsProp(c) => {
                    let (rho, lr, eps) =
                        (T::from_f64(c.decay), T::from_f64(c.lr), T::from_f64(c.eps));
                    let one = T::one();
                    let (pd, acc) = (p.data_mut(), m.data_mut());
                    for k in 0..pd.len() {
                        acc[k] = rho * acc[k] + (one - rho) * g[k] * g[k];
                        pd[k] -= lr * g[k] / (acc[k] + eps).sqrt();
                    }
                }
            }
        }
        Ok(())
    }
}

/// Clamps every trainable value into `[-c, c]`. Buffers are untouched.
pub fn weight_clip<T: Real>(params: &mut ParamStore<T>, c: f64) {
    let (lo, hi) = (T::from_f64(-c), T::from_f64(c));
    for p in params.trainable_mut().values_mut() {
        for v in p.data_mut() {
            *v = v.max(lo).min(hi);
        }
    }
}
