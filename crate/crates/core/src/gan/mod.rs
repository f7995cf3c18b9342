//! GAN training: standard (non-saturating), Wasserstein with weight
//! clipping, Wasserstein with gradient penalty.

mod diagnostics;
mod log;
mod trainer;

pub use diagnostics::{
    js_divergence_estimate, kde_density, mode_coverage, optimal_discriminator, ModeCoverage,
    COVERAGE_FRACTION,
};
pub use log::{LogRow, TrainingLog};
pub use trainer::{
    gradient_penalty, train_gan, train_standard_gan, train_wgan_clip, train_wgan_gp, CriticReport,
    GanTrainer, TrainedGan,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{AdamConfig, OptimizerConfig, RmsPropConfig};
use crate::tensor::Tensor;

/// Training procedure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Gan,
    WganClip,
    WganGp,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Self::Gan => "gan",
            Self::WganClip => "wgan_clip",
            Self::WganGp => "wgan_gp",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gan" => Ok(Self::Gan),
            "wgan_clip" => Ok(Self::WganClip),
            "wgan_gp" => Ok(Self::WganGp),
            other => Err(Error::invalid(format!("unknown variant `{other}`"))),
        }
    }
}

/// Abort threshold on the magnitude of any logged loss.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanConfig {
    pub variant: Variant,
    /// Minibatch size m.
    pub batch_size: usize,
    /// Discriminator steps k, or critic steps n_critic, per generator step.
    pub critic_steps: usize,
    pub epochs: usize,
    pub latent_dim: usize,
    pub lambda_gp: f64,
    pub clip: f64,
    pub optimizer: OptimizerConfig,
    pub seed: u64,
    pub divergence_limit: f64,
    /// Generated samples kept at the end of each epoch (0 keeps none).
    pub snapshot_samples: usize,
}

impl GanConfig {
    /// Defaults of each procedure: Adam(1e-4, 0.5, 0.9) with k = 1 for the
    /// standard GAN, RMSprop(5e-5) with c = 0.01 and n_critic = 5 for
    /// clipping, Adam(1e-4, 0.5, 0.9) with lambda = 10 and n_critic = 5 for
    /// the penalty.
    pub fn new(variant: Variant) -> Self {
        let (critic_steps, optimizer) = match variant {
            Variant::Gan => (1, OptimizerConfig::Adam(AdamConfig::default())),
            Variant::WganClip => (5, OptimizerConfig::RmsProp(RmsPropConfig::default())),
            Variant::WganGp => (5, OptimizerConfig::Adam(AdamConfig::default())),
        };
        Self {
            variant,
            batch_size: 64,
            critic_steps,
            epochs: 30,
            latent_dim: 2,
            lambda_gp: 10.0,
            clip: 0.01,
            optimizer,
            seed: 0,
            divergence_limit: DIVERGENCE_LIMIT,
            snapshot_samples: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch size must be at least 1"));
        }
        if self.critic_steps == 0 {
            return Err(Error::invalid("critic steps must be at least 1"));
        }
        if self.latent_dim == 0 {
            return Err(Error::invalid("latent dimension must be at least 1"));
        }
        if !(self.lambda_gp >= 0.0 && self.lambda_gp.is_finite()) {
            return Err(Error::invalid("lambda_gp must be non-negative"));
        }
        if self.variant == Variant::WganClip && !(self.clip > 0.0 && self.clip.is_finite()) {
            return Err(Error::invalid("clip bound must be positive"));
        }
        if !(self.divergence_limit > 0.0) {
            return Err(Error::invalid("divergence limit must be positive"));
        }
        Ok(())
    }
}

/// Mean of elementwise products of labels (+1 real, -1 generated) and
/// critic outputs.
pub fn wasserstein_loss(labels: &Tensor, outputs: &Tensor) -> Result<f64> {
    if labels.len() != outputs.len() {
        return Err(Error::Shape(format!(
            "{} labels for {} outputs",
            labels.len(),
            outputs.len()
        )));
    }
    if labels.is_empty() {
        return Err(Error::Empty("no critic outputs".into()));
    }
    Ok(labels
        .data()
        .iter()
        .zip(outputs.data())
        .map(|(y, f)| y * f)
        .sum::<f64>()
        / labels.len() as f64)
}

#[cfg(test)]
mod tests;
