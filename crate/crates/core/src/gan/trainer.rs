use std::time::Instant;

use rand::Rng;

use super::{GanConfig, LogRow, TrainingLog, Variant};
use crate::autodiff::{NodeId, Tape};
use crate::error::{Error, Result};
use crate::nn::{weight_clip, Activation, Bound, Mode, Network, NetworkSpec, Optimizer};
use crate::real::Real;
use crate::rng::{normal_tensor, stream_rng, sub_stream, BatchSampler, Stream, StreamRng};
use crate::tensor::Tensor;

/// Added under the square root of the gradient norm.
const NORM_EPS: f64 = 1e-12;

/// Mean over rows of `(||grad_x f(x_hat)||_2 - 1)^2`, with
/// `x_hat = eps * real + (1 - eps) * fake` and one `eps ~ U[0, 1]` per row.
/// The result stays differentiable in the critic's bound parameters.
pub fn gradient_penalty<T: Real, R: Rng + ?Sized>(
    tape: &mut Tape<T>,
    critic: &Network<T>,
    bound: &Bound,
    real: &Tensor<T>,
    fake: &Tensor<T>,
    rng: &mut R,
) -> Result<NodeId> {
    if real.shape() != fake.shape() {
        return Err(Error::Shape(format!(
            "real {:?} vs fake {:?}",
            real.shape(),
            fake.shape()
        )));
    }
    let (m, d) = (real.rows(), real.cols());
    let mut mixed = Vec::with_capacity(m * d);
    for i in 0..m {
        let e = T::from_f64(rng.random::<f64>());
        let one = T::one();
        mixed.extend(
            real.row(i)
                .iter()
                .zip(fake.row(i))
                .map(|(&r, &f)| e * r + (one - e) * f),
        );
    }
    let x_hat = tape.input(Tensor::from_parts(vec![m, d], mixed));
    let f = critic.forward_on(tape, bound, x_hat, Mode::Train)?;
    let total = tape.sum(f.output);
    let g = tape.input_gradient(total, x_hat)?;
    let sq = tape.square(g);
    let norm2 = tape.sum_cols(sq);
    let norm2 = tape.add_scalar(norm2, NORM_EPS);
    let norm = tape.sqrt(norm2);
    let dev = tape.add_scalar(norm, -1.0);
    let dev2 = tape.square(dev);
    Ok(tape.mean(dev2))
}

/// Outcome of one critic update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticReport {
    /// Wasserstein surrogate `mean f(real) - mean f(fake)` for the critic
    /// variants, binary cross-entropy for the standard GAN.
    pub loss: f64,
    pub penalty: Option<f64>,
}

/// Generator and critic after training, with the update log.
#[derive(Debug, Clone)]
pub struct TrainedGan<T: Real = f64> {
    pub generator: Network<T>,
    pub critic: Network<T>,
    pub log: TrainingLog,
}

/// Stepwise trainer; [`GanTrainer::train`] runs whole epochs.
pub struct GanTrainer<T: Real = f64> {
    pub config: GanConfig,
    pub generator: Network<T>,
    pub critic: Network<T>,
    pub log: TrainingLog,
    data: Tensor<T>,
    gen_opt: Optimizer<T>,
    critic_opt: Optimizer<T>,
    rng: StreamRng,
    sampler: BatchSampler,
    epoch: usize,
    start: Instant,
}

impl<T: Real> GanTrainer<T> {
    /// Fresh networks initialized from the config seed.
    pub fn new(
        config: GanConfig,
        gen_spec: NetworkSpec,
        critic_spec: NetworkSpec,
        data: &Tensor,
    ) -> Result<Self> {
        let generator = Network::new_indexed(gen_spec, config.seed, 1);
        let critic = Network::new_indexed(critic_spec, config.seed, 2);
        Self::from_networks(config, generator, critic, data)
    }

    pub fn from_networks(
        config: GanConfig,
        generator: Network<T>,
        critic: Network<T>,
        data: &Tensor,
    ) -> Result<Self> {
        config.validate()?;
        if data.rows() == 0 {
            return Err(Error::Empty("training data".into()));
        }
        if generator.spec.input_width() != config.latent_dim {
            return Err(Error::Shape(format!(
                "generator takes {} inputs, latent dimension is {}",
                generator.spec.input_width(),
                config.latent_dim
            )));
        }
        if generator.spec.output_width() != data.cols() || critic.spec.input_width() != data.cols()
        {
            return Err(Error::Shape(format!(
                "data has {} columns, generator emits {}, critic reads {}",
                data.cols(),
                generator.spec.output_width(),
                critic.spec.input_width()
            )));
        }
        if critic.spec.output_width() != 1 {
            return Err(Error::Shape("critic must emit one value per sample".into()));
        }
        match config.variant {
            Variant::Gan if critic.spec.output_activation() != Activation::Sigmoid => {
                return Err(Error::invalid(
                    "standard GAN discriminator needs a sigmoid output",
                ))
            }
            Variant::WganClip | Variant::WganGp
                if critic.spec.output_activation() != Activation::Identity =>
            {
                return Err(Error::invalid("Wasserstein critic needs a linear output"))
            }
            Variant::WganGp if critic.spec.has_batch_norm() => {
                return Err(Error::invalid(
                    "batch norm in the critic breaks the per-sample penalty",
                ))
            }
            _ => {}
        }
        Ok(Self {
            gen_opt: Optimizer::new(config.optimizer),
            critic_opt: Optimizer::new(config.optimizer),
            rng: stream_rng(config.seed, Stream::Training),
            sampler: BatchSampler::new(data.rows()),
            data: data.cast(),
            config,
            generator,
            critic,
            log: TrainingLog::default(),
            epoch: 0,
            start: Instant::now(),
        })
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// Generator updates making up one epoch.
    pub fn updates_per_epoch(&self) -> usize {
        (self.data.rows() / self.config.batch_size).max(1)
    }

    fn latent(&mut self) -> Tensor<T> {
        normal_tensor(
            &mut self.rng,
            self.config.batch_size,
            self.config.latent_dim,
        )
    }

    fn guard(&self, value: f64) -> Result<()> {
        let update = self.log.rows.len();
        if !value.is_finite() {
            return Err(Error::NonFiniteLoss { update });
        }
        if value.abs() > self.config.divergence_limit {
            return Err(Error::Diverged {
                update,
                loss: value,
                limit: self.config.divergence_limit,
            });
        }
        Ok(())
    }

    fn non_finite(&self, e: Error) -> Error {
        match e {
            Error::NonFinite(_) => Error::NonFiniteLoss {
                update: self.log.rows.len(),
            },
            other => other,
        }
    }

    fn push(&mut self, critic_loss: Option<f64>, penalty: Option<f64>, gen_loss: Option<f64>) {
        let row = LogRow {
            update_index: self.log.rows.len(),
            epoch: self.epoch,
            critic_loss,
            penalty,
            gen_loss,
            wall_ms: self.start.elapsed().as_secs_f64() * 1e3,
        };
        self.log.rows.push(row);
    }

    /// One critic (discriminator) update on a fresh real batch and fresh
    /// generated batch.
    pub fn critic_step(&mut self) -> Result<CriticReport> {
        let idx = self
            .sampler
            .next_batch(&mut self.rng, self.config.batch_size);
        let real = self.data.select_rows(&idx);
        let z = self.latent();
        let fake = {
            let mut tape = Tape::new();
            let gb = self.generator.bind(&mut tape, false);
            let zi = tape.input(z);
            let out = self
                .generator
                .forward_on(&mut tape, &gb, zi, Mode::Train)?
                .output;
            tape.check_finite().map_err(|e| self.non_finite(e))?;
            tape.value(out).clone()
        };

        let mut tape = Tape::new();
        let cb = self.critic.bind(&mut tape, true);
        let xr = tape.input(real.clone());
        let xf = tape.input(fake.clone());
        let pr = self.critic.forward_on(&mut tape, &cb, xr, Mode::Train)?;
        let pf = self.critic.forward_on(&mut tape, &cb, xf, Mode::Train)?;
        let (objective, surrogate, penalty) = match self.config.variant {
            Variant::Gan => {
                let nr = tape.neg(pr.logits);
                let lr = tape.softplus(nr);
                let lf = tape.softplus(pf.logits);
                let mr = tape.mean(lr);
                let mf = tape.mean(lf);
                let loss = tape.add(mr, mf);
                (loss, loss, None)
            }
            Variant::WganClip | Variant::WganGp => {
                let mr = tape.mean(pr.output);
                let mf = tape.mean(pf.output);
                let gap = tape.sub(mf, mr);
                if self.config.variant == Variant::WganGp {
                    let pen = gradient_penalty(
                        &mut tape,
                        &self.critic,
                        &cb,
                        &real,
                        &fake,
                        &mut self.rng,
                    )?;
                    let weighted = tape.scale(pen, self.config.lambda_gp);
                    (tape.add(gap, weighted), gap, Some(pen))
                } else {
                    (gap, gap, None)
                }
            }
        };
        tape.check_finite().map_err(|e| self.non_finite(e))?;
        let total = tape.value(objective).item().as_f64();
        self.guard(total)?;
        let grads = tape.backward(objective).map_err(|e| self.non_finite(e))?;
        self.critic_opt.step(&mut self.critic.params, &grads)?;
        if self.config.variant == Variant::WganClip {
            weight_clip(&mut self.critic.params, self.config.clip);
        }
        self.critic.apply_bn_stats(&pr.bn_stats);

        let value = tape.value(surrogate).item().as_f64();
        let loss = if self.config.variant == Variant::Gan {
            value
        } else {
            -value
        };
        let penalty = penalty.map(|p| tape.value(p).item().as_f64());
        self.push(Some(loss), penalty, None);
        Ok(CriticReport { loss, penalty })
    }

    /// One generator update; returns its loss.
    pub fn generator_step(&mut self) -> Result<f64> {
        let z = self.latent();
        let mut tape = Tape::new();
        let gb = self.generator.bind(&mut tape, true);
        let cb = self.critic.bind(&mut tape, false);
        let zi = tape.input(z);
        let g = self.generator.forward_on(&mut tape, &gb, zi, Mode::Train)?;
        let c = self
            .critic
            .forward_on(&mut tape, &cb, g.output, Mode::Train)?;
        let loss = match self.config.variant {
            Variant::Gan => {
                let nl = tape.neg(c.logits);
                let sp = tape.softplus(nl);
                tape.mean(sp)
            }
            Variant::WganClip | Variant::WganGp => {
                let m = tape.mean(c.output);
                tape.neg(m)
            }
        };
        tape.check_finite().map_err(|e| self.non_finite(e))?;
        let value = tape.value(loss).item().as_f64();
        self.guard(value)?;
        let grads = tape.backward(loss).map_err(|e| self.non_finite(e))?;
        self.gen_opt.step(&mut self.generator.params, &grads)?;
        self.generator.apply_bn_stats(&g.bn_stats);
        self.push(None, None, Some(value));
        Ok(value)
    }

    /// `floor(N / m)` generator updates, each preceded by its critic updates.
    pub fn train_epoch(&mut self) -> Result<()> {
        for _ in 0..self.updates_per_epoch() {
            for _ in 0..self.config.critic_steps {
                self.critic_step()?;
            }
            self.generator_step()?;
        }
        if self.config.snapshot_samples > 0 {
            let mut rng = sub_stream(self.config.seed, Stream::Evaluation, self.epoch as u64);
            let z = normal_tensor(
                &mut rng,
                self.config.snapshot_samples,
                self.config.latent_dim,
            );
            let s = self.generator.infer(&z)?.cast();
            self.log.snapshots.push((self.epoch, s));
        }
        self.epoch += 1;
        Ok(())
    }

    pub fn train(mut self) -> Result<TrainedGan<T>> {
        while self.epoch < self.config.epochs {
            self.train_epoch()?;
        }
        Ok(self.finish())
    }

    pub fn finish(self) -> TrainedGan<T> {
        TrainedGan {
            generator: self.generator,
            critic: self.critic,
            log: self.log,
        }
    }
}

impl<T: Real> Network<T> {
    /// `n` generator samples from standard-normal latents drawn from `rng`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Tensor<T>> {
        let z = normal_tensor(rng, n, self.spec.input_width());
        self.infer_chunked(&z, 4096)
    }
}

/// Trains with whichever procedure `config.variant` names.
pub fn train_gan<T: Real>(
    data: &Tensor,
    gen_spec: NetworkSpec,
    critic_spec: NetworkSpec,
    config: GanConfig,
) -> Result<TrainedGan<T>> {
    GanTrainer::new(config, gen_spec, critic_spec, data)?.train()
}

fn with_variant(mut config: GanConfig, v: Variant) -> GanConfig {
    config.variant = v;
    config
}

pub fn train_standard_gan<T: Real>(
    data: &Tensor,
    gen_spec: NetworkSpec,
    disc_spec: NetworkSpec,
    config: GanConfig,
) -> Result<TrainedGan<T>> {
    train_gan(
        data,
        gen_spec,
        disc_spec,
        with_variant(config, Variant::Gan),
    )
}

pub fn train_wgan_clip<T: Real>(
    data: &Tensor,
    gen_spec: NetworkSpec,
    critic_spec: NetworkSpec,
    config: GanConfig,
) -> Result<TrainedGan<T>> {
    train_gan(
        data,
        gen_spec,
        critic_spec,
        with_variant(config, Variant::WganClip),
    )
}

pub fn train_wgan_gp<T: Real>(
    data: &Tensor,
    gen_spec: NetworkSpec,
    critic_spec: NetworkSpec,
    config: GanConfig,
) -> Result<TrainedGan<T>> {
    train_gan(
        data,
        gen_spec,
        critic_spec,
        with_variant(config, Variant::WganGp),
    )
}
