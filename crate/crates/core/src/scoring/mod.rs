//! Anomaly scores. Higher always means more anomalous.

mod report;

pub use report::{ScoreReport, ScoreRow, Scorer};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latent::EncoderBundle;
use crate::nn::Network;
use crate::real::Real;
use crate::tensor::Tensor;

const CHUNK: usize = 4096;

/// Range of critic outputs seen on training data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticInterval {
    pub lower: f64,
    pub upper: f64,
}

impl CriticInterval {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if !(lower <= upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::invalid(format!("bad interval [{lower}, {upper}]")));
        }
        Ok(Self { lower, upper })
    }

    /// Distance from `value` to the interval; zero inside.
    pub fn distance(&self, value: f64) -> f64 {
        if value < self.lower {
            self.lower - value
        } else if value > self.upper {
            value - self.upper
        } else {
            0.0
        }
    }

    pub fn contains(&self, value: f64) -> bool {
        self.distance(value) == 0.0
    }
}

fn critic_values<T: Real>(critic: &Network<T>, x: &Tensor<T>) -> Result<Vec<f64>> {
    if critic.spec.output_width() != 1 {
        return Err(Error::Shape("critic must emit one value per sample".into()));
    }
    Ok(critic.infer_chunked(x, CHUNK)?.to_f64_vec())
}

pub fn fit_critic_interval<T: Real>(
    critic: &Network<T>,
    train: &Tensor<T>,
) -> Result<CriticInterval> {
    if train.rows() == 0 {
        return Err(Error::Empty("critic interval training data".into()));
    }
    let v = critic_values(critic, train)?;
    let lower = v.iter().copied().fold(f64::INFINITY, f64::min);
    let upper = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    CriticInterval::new(lower, upper)
}

pub fn critic_score<T: Real>(
    critic: &Network<T>,
    interval: &CriticInterval,
    x: &Tensor<T>,
) -> Result<Vec<f64>> {
    Ok(critic_values(critic, x)?
        .into_iter()
        .map(|v| interval.distance(v))
        .collect())
}

fn check_mix(name: &str, w: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&w) {
        return Err(Error::invalid(format!(
            "{name} must lie in [0, 1], got {w}"
        )));
    }
    Ok(())
}

/// `w * a + (1 - w) * b`.
pub fn mix_losses(w: f64, a: f64, b: f64) -> Result<f64> {
    check_mix("mixing coefficient", w)?;
    Ok(w * a + (1.0 - w) * b)
}

fn row_l1<T: Real>(a: &Tensor<T>, b: &Tensor<T>) -> Vec<f64> {
    (0..a.rows())
        .map(|i| {
            a.row(i)
                .iter()
                .zip(b.row(i))
                .map(|(&p, &q)| (p - q).as_f64().abs())
                .sum()
        })
        .collect()
}

fn last_hidden<T: Real>(critic: &Network<T>, x: &Tensor<T>) -> Result<Tensor<T>> {
    if critic.spec.layers().len() < 2 {
        return Err(Error::invalid(
            "feature matching needs a critic with a hidden layer",
        ));
    }
    Ok(critic.infer_with_hidden(x)?.1)
}

/// Per-sample `(residual, feature)` terms: L1 distance between `x` and its
/// reconstruction, and between their last-hidden-layer critic features.
pub fn reconstruction_terms<T: Real>(
    critic: &Network<T>,
    x: &Tensor<T>,
    recon: &Tensor<T>,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.shape() != recon.shape() {
        return Err(Error::Shape(format!(
            "samples {:?} vs reconstructions {:?}",
            x.shape(),
            recon.shape()
        )));
    }
    let residual = row_l1(x, recon);
    let feature = row_l1(&last_hidden(critic, x)?, &last_hidden(critic, recon)?);
    Ok((residual, feature))
}

/// `lambda * L_D + (1 - lambda) * L_R` with `G(z*)` from latent inversion.
pub fn anogan_score<T: Real>(
    critic: &Network<T>,
    generator: &Network<T>,
    x: &Tensor<T>,
    z_star: &Tensor<T>,
    lambda_mix: f64,
) -> Result<Vec<f64>> {
    check_mix("lambda_mix", lambda_mix)?;
    if z_star.rows() != x.rows() {
        return Err(Error::Shape(format!(
            "{} codes for {} samples",
            z_star.rows(),
            x.rows()
        )));
    }
    let recon = generator.infer_chunked(z_star, CHUNK)?;
    let (res, feat) = reconstruction_terms(critic, x, &recon)?;
    Ok(res
        .iter()
        .zip(&feat)
        .map(|(&r, &f)| lambda_mix * f + (1.0 - lambda_mix) * r)
        .collect())
}

/// `alpha * L_G + (1 - alpha) * L_D` with `G(E(x))` from the encoder bundle.
pub fn bigan_style_score<T: Real>(
    bundle: &EncoderBundle<T>,
    critic: &Network<T>,
    x: &Tensor<T>,
    alpha_mix: f64,
) -> Result<Vec<f64>> {
    check_mix("alpha_mix", alpha_mix)?;
    let recon = bundle.reconstruct(x)?;
    let (res, feat) = reconstruction_terms(critic, x, &recon)?;
    Ok(res
        .iter()
        .zip(&feat)
        .map(|(&g, &d)| alpha_mix * g + (1.0 - alpha_mix) * d)
        .collect())
}

/// Mean over components of `(x - G(E(x)))^2`.
pub fn encoder_mse_score<T: Real>(bundle: &EncoderBundle<T>, x: &Tensor<T>) -> Result<Vec<f64>> {
    let recon = bundle.reconstruct(x)?;
    let d = x.cols() as f64;
    Ok((0..x.rows())
        .map(|i| {
            x.row(i)
                .iter()
                .zip(recon.row(i))
                .map(|(&p, &q)| (p - q).as_f64().powi(2))
                .sum::<f64>()
                / d
        })
        .collect())
}
