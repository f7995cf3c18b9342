use serde::{Deserialize, Serialize};

use crate::autodiff::Tape;
use crate::error::{Error, Result};
use crate::nn::{AdamConfig, Mode, Network, NetworkSpec, Optimizer};
use crate::real::Real;
use crate::rng::{sub_stream, BatchSampler, Stream};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: AdamConfig,
    pub seed: u64,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 64,
            optimizer: AdamConfig::default(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct EncoderLog {
    pub update_losses: Vec<f64>,
    pub epoch_means: Vec<f64>,
}

/// Encoder stacked under a frozen generator.
#[derive(Debug, Clone)]
pub struct EncoderBundle<T: Real = f64> {
    pub encoder: Network<T>,
    pub generator: Network<T>,
    pub log: EncoderLog,
}

impl<T: Real> EncoderBundle<T> {
    pub fn new(encoder: Network<T>, generator: Network<T>) -> Result<Self> {
        if encoder.spec.output_width() != generator.spec.input_width() {
            return Err(Error::Shape(format!(
                "encoder emits {} codes, generator takes {}",
                encoder.spec.output_width(),
                generator.spec.input_width()
            )));
        }
        if encoder.spec.input_width() != generator.spec.output_width() {
            return Err(Error::Shape(format!(
                "encoder reads {} columns, generator emits {}",
                encoder.spec.input_width(),
                generator.spec.output_width()
            )));
        }
        Ok(Self {
            encoder,
            generator,
            log: EncoderLog::default(),
        })
    }

    /// Latent codes in inference mode.
    pub fn encode(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.encoder.infer_chunked(x, 4096)
    }

    /// `G(E(x))` in inference mode.
    pub fn reconstruct(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.generator.infer_chunked(&self.encode(x)?, 4096)
    }
}

pub fn reconstruct<T: Real>(bundle: &EncoderBundle<T>, x: &Tensor<T>) -> Result<Tensor<T>> {
    bundle.reconstruct(x)
}

/// Minimizes the batch mean of `||G(E(x)) - x||^2` over the encoder only.
/// The encoder's last layer must be batch-normalized.
pub fn train_encoder<T: Real>(
    generator: &Network<T>,
    encoder_spec: NetworkSpec,
    data: &Tensor,
    config: &EncoderConfig,
) -> Result<EncoderBundle<T>> {
    if !encoder_spec.layers().last().expect("non-empty").batch_norm {
        return Err(Error::invalid(
            "encoder output layer must be batch-normalized",
        ));
    }
    if config.batch_size < 2 {
        return Err(Error::invalid(
            "encoder batch size must be at least 2 for batch norm",
        ));
    }
    if data.rows() == 0 {
        return Err(Error::Empty("encoder training data".into()));
    }
    let encoder = Network::new_indexed(encoder_spec, config.seed, 3);
    let mut bundle = EncoderBundle::new(encoder, generator.clone())?;
    let before = generator.params.checksum();
    let data: Tensor<T> = data.cast();
    let mut opt = Optimizer::adam(config.optimizer);
    let mut rng = sub_stream(config.seed, Stream::Training, 7);
    let mut sampler = BatchSampler::new(data.rows());
    let per_epoch = (data.rows() / config.batch_size).max(1);
    for _ in 0..config.epochs {
        let mut sum = 0.0;
        for _ in 0..per_epoch {
            let idx = sampler.next_batch(&mut rng, config.batch_size);
            let x = data.select_rows(&idx);
            let mut tape = Tape::new();
            let eb = bundle.encoder.bind(&mut tape, true);
            let gb = bundle.generator.bind(&mut tape, false);
            let xi = tape.input(x);
            let e = bundle.encoder.forward_on(&mut tape, &eb, xi, Mode::Train)?;
            let g = bundle
                .generator
                .forward_on(&mut tape, &gb, e.output, Mode::Infer)?;
            let diff = tape.sub(g.output, xi);
            let sq = tape.square(diff);
            let total = tape.sum(sq);
            let loss = tape.scale(total, 1.0 / idx.len() as f64);
            let update = bundle.log.update_losses.len();
            tape.check_finite()
                .map_err(|_| Error::NonFiniteLoss { update })?;
            let value = tape.value(loss).item().as_f64();
            let grads = tape
                .backward(loss)
                .map_err(|_| Error::NonFiniteLoss { update })?;
            opt.step(&mut bundle.encoder.params, &grads)?;
            bundle.encoder.apply_bn_stats(&e.bn_stats);
            bundle.log.update_losses.push(value);
            sum += value;
        }
        bundle.log.epoch_means.push(sum / per_epoch as f64);
    }
    let after = bundle.generator.params.checksum();
    if before != after {
        return Err(Error::FrozenModified { before, after });
    }
    Ok(bundle)
}
