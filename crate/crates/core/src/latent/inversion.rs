use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::Tape;
use crate::error::{Error, Result};
use crate::nn::{Activation, Mode, Network};
use crate::real::Real;
use crate::rng::{normal_tensor, sub_stream, Stream};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reconstruction {
    /// Mean squared error over components.
    SquaredError,
    /// Mean pixelwise Bernoulli cross-entropy; needs a sigmoid output.
    CrossEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionConfig {
    pub steps: usize,
    pub step_size: f64,
    pub lambda_prior: f64,
    pub restarts: usize,
    pub reconstruction: Reconstruction,
    pub seed: u64,
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self {
            steps: 400,
            step_size: 0.01,
            lambda_prior: 0.1,
            restarts: 3,
            reconstruction: Reconstruction::SquaredError,
            seed: 0,
        }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::invalid("inversion needs at least one step"));
        }
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            return Err(Error::invalid("inversion step size must be positive"));
        }
        if !(self.lambda_prior >= 0.0 && self.lambda_prior.is_finite()) {
            return Err(Error::invalid("lambda_prior must be non-negative"));
        }
        if self.restarts == 0 {
            return Err(Error::invalid("inversion needs at least one restart"));
        }
        Ok(())
    }
}

/// Best latent code found for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct Inversion<T: Real = f64> {
    pub z: Tensor<T>,
    pub loss: f64,
}

/// Row losses `recon(x_i, G(z_i)) + lambda * (-log P(z_i))` where
/// `log P(z) = (1/d') sum_j log phi(z_j)`, and the gradient in `z`.
fn loss_and_grad<T: Real>(
    generator: &Network<T>,
    x: &Tensor<T>,
    z: &Tensor<T>,
    config: &InversionConfig,
) -> Result<(Vec<f64>, Tensor<T>)> {
    let (d, k) = (x.cols(), z.cols());
    let mut tape = Tape::new();
    let gb = generator.bind(&mut tape, false);
    let zi = tape.param("z", z.clone());
    let xi = tape.constant(x.clone());
    let pass = generator.forward_on(&mut tape, &gb, zi, Mode::Infer)?;
    let recon_sum = match config.reconstruction {
        Reconstruction::SquaredError => {
            let diff = tape.sub(pass.output, xi);
            let sq = tape.square(diff);
            tape.sum_cols(sq)
        }
        Reconstruction::CrossEntropy => {
            // softplus(l) - x * l per pixel, with l the pre-sigmoid logits.
            let sp = tape.softplus(pass.logits);
            let xl = tape.mul(xi, pass.logits);
            let ce = tape.sub(sp, xl);
            tape.sum_cols(ce)
        }
    };
    let recon = tape.scale(recon_sum, 1.0 / d as f64);
    let z2 = tape.square(zi);
    let z2 = tape.sum_cols(z2);
    let nlp = tape.scale(z2, 0.5 / k as f64);
    let nlp = tape.add_scalar(nlp, 0.5 * (2.0 * std::f64::consts::PI).ln());
    let prior = tape.scale(nlp, config.lambda_prior);
    let rows = tape.add(recon, prior);
    let total = tape.sum(rows);
    tape.check_finite()
        .map_err(|_| Error::NonFiniteLoss { update: 0 })?;
    let losses = tape.value(rows).data().iter().map(|v| v.as_f64()).collect();
    let grad = tape
        .backward(total)?
        .get("z")
        .expect("z is a parameter")
        .clone();
    Ok((losses, grad))
}

fn invert_chunk<T: Real>(
    generator: &Network<T>,
    xs: &Tensor<T>,
    first_query: usize,
    config: &InversionConfig,
) -> Result<Vec<Inversion<T>>> {
    let (n, k) = (xs.rows(), generator.spec.input_width());
    let mut best: Vec<Inversion<T>> = (0..n)
        .map(|_| Inversion {
            z: Tensor::zeros(&[1, k]),
            loss: f64::INFINITY,
        })
        .collect();
    let step = T::from_f64(config.step_size);
    let mut rngs: Vec<_> = (0..n)
        .map(|q| sub_stream(config.seed, Stream::Inversion, (first_query + q) as u64))
        .collect();
    for _ in 0..config.restarts {
        let mut z = Vec::with_capacity(n * k);
        for rng in rngs.iter_mut() {
            z.extend(normal_tensor::<T, _>(rng, 1, k).into_data());
        }
        let mut z = Tensor::matrix(n, k, z)?;
        for it in 0..=config.steps {
            let (losses, grad) = loss_and_grad(generator, xs, &z, config).map_err(|e| match e {
                Error::NonFiniteLoss { .. } => Error::NonFiniteLoss { update: it },
                other => other,
            })?;
            for (q, &l) in losses.iter().enumerate() {
                if l < best[q].loss {
                    best[q] = Inversion {
                        z: Tensor::matrix(1, k, z.row(q).to_vec())?,
                        loss: l,
                    };
                }
            }
            if it == config.steps {
                break;
            }
            z = z.zip_map(&grad, |a, g| a - step * g);
        }
    }
    Ok(best)
}

/// Inverts every row of `xs`. Each query draws its restarts in order from
/// its own stream, so results do not depend on chunking, and adding
/// restarts keeps the earlier ones unchanged.
/// Chunks run in parallel on the rayon pool.
pub fn invert_batch<T: Real>(
    generator: &Network<T>,
    xs: &Tensor<T>,
    config: &InversionConfig,
) -> Result<Vec<Inversion<T>>> {
    config.validate()?;
    if xs.cols() != generator.spec.output_width() {
        return Err(Error::Shape(format!(
            "query has {} columns, generator emits {}",
            xs.cols(),
            generator.spec.output_width()
        )));
    }
    if config.reconstruction == Reconstruction::CrossEntropy
        && generator.spec.output_activation() != Activation::Sigmoid
    {
        return Err(Error::invalid(
            "cross-entropy reconstruction needs a sigmoid generator output",
        ));
    }
    const CHUNK: usize = 64;
    let n = xs.rows();
    let chunks: Vec<usize> = (0..n).step_by(CHUNK).collect();
    let parts = chunks
        .par_iter()
        .map(|&start| {
            let rows: Vec<usize> = (start..(start + CHUNK).min(n)).collect();
            invert_chunk(generator, &xs.select_rows(&rows), start, config)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// Inverts a single sample (`1 x d`).
pub fn invert_generator<T: Real>(
    generator: &Network<T>,
    x: &Tensor<T>,
    config: &InversionConfig,
) -> Result<Inversion<T>> {
    if x.rows() != 1 {
        return Err(Error::Shape(format!(
            "expected one sample, got {}",
            x.rows()
        )));
    }
    Ok(invert_batch(generator, x, config)?.remove(0))
}
