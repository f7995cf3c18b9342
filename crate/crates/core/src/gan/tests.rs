use std::collections::BTreeMap;

use super::*;
use crate::autodiff::{finite_diff_check, Tape};
use crate::data::{sample_gaussian_mixture, GaussianMixtureSpec};
use crate::error::Error;
use crate::nn::{encode_checkpoint, Activation, Network, NetworkSpec};
use crate::rng::{stream_rng, uniform_tensor, Stream};
use crate::tensor::Tensor;

fn linear(input: usize, act: Activation) -> NetworkSpec {
    NetworkSpec::dense(&[input, 1], Activation::Identity, act).unwrap()
}

fn set(net: &mut Network, name: &str, values: &[f64]) {
    let t = net.params.get_mut(name).unwrap();
    t.data_mut().copy_from_slice(values);
}

#[test]
fn wasserstein_loss_is_mean_of_products() {
    let out = Tensor::matrix(2, 1, vec![0.2, 0.4]).unwrap();
    let pos = Tensor::full(&[2, 1], 1.0);
    let neg = Tensor::full(&[2, 1], -1.0);
    assert!((wasserstein_loss(&pos, &out).unwrap() - 0.3).abs() < 1e-15);
    assert!((wasserstein_loss(&neg, &out).unwrap() + 0.3).abs() < 1e-15);
    let mixed = Tensor::matrix(2, 1, vec![1.0, -1.0]).unwrap();
    assert_eq!(
        wasserstein_loss(&mixed, &Tensor::full(&[2, 1], 1.0)).unwrap(),
        0.0
    );
    assert!(wasserstein_loss(&mixed, &Tensor::full(&[3, 1], 1.0)).is_err());
}

fn penalty_of(critic: &Network, real: &Tensor, fake: &Tensor) -> f64 {
    let mut tape = Tape::new();
    let b = critic.bind(&mut tape, true);
    let mut rng = stream_rng(1, Stream::Training);
    let p = gradient_penalty(&mut tape, critic, &b, real, fake, &mut rng).unwrap();
    tape.value(p).item()
}

#[test]
fn penalty_of_linear_critics() {
    let mut critic = Network::new(linear(2, Activation::Identity), 0);
    let mut rng = stream_rng(4, Stream::Data);
    let real = uniform_tensor(&mut rng, 16, 2, -3.0, 3.0);
    let fake = uniform_tensor(&mut rng, 16, 2, -3.0, 3.0);
    set(&mut critic, "layer0.weight", &[0.6, 0.8]);
    assert!(penalty_of(&critic, &real, &fake).abs() < 1e-10);
    set(&mut critic, "layer0.weight", &[0.0, 3.0]);
    assert!((penalty_of(&critic, &real, &fake) - 4.0).abs() < 1e-10);
}

#[test]
fn penalty_parameter_gradient_matches_finite_differences() {
    let spec = NetworkSpec::dense(&[2, 8, 8, 1], Activation::Tanh, Activation::Identity).unwrap();
    let critic = Network::<f64>::new(spec, 3);
    let mut rng = stream_rng(2, Stream::Data);
    let real = uniform_tensor(&mut rng, 5, 2, -1.0, 1.0);
    let fake = uniform_tensor(&mut rng, 5, 2, -1.0, 1.0);
    let f = |tape: &mut Tape<f64>, ids: &BTreeMap<String, crate::autodiff::NodeId>| {
        let b = critic.bind_nodes(tape, ids);
        let mut rng = stream_rng(9, Stream::Training);
        gradient_penalty(tape, &critic, &b, &real, &fake, &mut rng)
    };
    let err = finite_diff_check(f, critic.params.trainable(), 1e-6).unwrap();
    assert!(err < 1e-4, "{err}");
}

fn one_d_setup(variant: Variant) -> GanTrainer<f64> {
    let data = Tensor::full(&[8, 1], 2.0);
    let mut config = GanConfig::new(variant);
    config.batch_size = 4;
    config.latent_dim = 1;
    config.critic_steps = 1;
    let out = if variant == Variant::Gan {
        Activation::Sigmoid
    } else {
        Activation::Identity
    };
    let mut t = GanTrainer::new(
        config,
        linear(1, Activation::Identity),
        linear(1, out),
        &data,
    )
    .unwrap();
    set(&mut t.generator, "layer0.weight", &[0.0]);
    set(&mut t.generator, "layer0.bias", &[0.5]);
    set(&mut t.critic, "layer0.weight", &[0.3]);
    set(&mut t.critic, "layer0.bias", &[0.1]);
    t
}

#[test]
fn wgan_gp_critic_step_matches_hand_computed_adam_step() {
    let mut t = one_d_setup(Variant::WganGp);
    let report = t.critic_step().unwrap();
    let (w, b) = (0.3_f64, 0.1);
    // Real batch is all 2.0, fakes all 0.5; f'(x) = w so the penalty is (|w| - 1)^2.
    let norm = (w * w + 1e-12).sqrt();
    let grad_w = 0.5 - 2.0 + 10.0 * 2.0 * (norm - 1.0) * w / norm;
    let lr = 1e-4;
    let expect_w = w - lr * grad_w / (grad_w.abs() + 1e-8);
    let got_w = t.critic.params.get("layer0.weight").unwrap().item();
    assert!((got_w - expect_w).abs() < 1e-15, "{got_w} vs {expect_w}");
    assert_eq!(t.critic.params.get("layer0.bias").unwrap().item(), b);
    assert!((report.loss - (2.0 - 0.5) * w).abs() < 1e-12);
    assert!((report.penalty.unwrap() - (norm - 1.0).powi(2)).abs() < 1e-12);
}

#[test]
fn wgan_generator_step_matches_hand_computed_adam_step() {
    let mut t = one_d_setup(Variant::WganGp);
    let loss = t.generator_step().unwrap();
    // loss = -mean(w (a z + c) + b); d/dc = -w < 0, so c moves up by lr.
    let c = t.generator.params.get("layer0.bias").unwrap().item();
    assert!((c - (0.5 + 1e-4 * 0.3 / (0.3 + 1e-8))).abs() < 1e-15);
    assert!((loss + (0.3 * 0.5 + 0.1)).abs() < 1e-12);
}

#[test]
fn standard_gan_discriminator_step_matches_hand_computation() {
    let mut t = one_d_setup(Variant::Gan);
    let report = t.critic_step().unwrap();
    let (w, b) = (0.3_f64, 0.1);
    let sig = |x: f64| 1.0 / (1.0 + (-x).exp());
    let (lr_, lf) = (2.0 * w + b, 0.5 * w + b);
    let gw = -2.0 * sig(-lr_) + 0.5 * sig(lf);
    let gb = -sig(-lr_) + sig(lf);
    let step = |p: f64, g: f64| p - 1e-4 * g / (g.abs() + 1e-8);
    assert!((t.critic.params.get("layer0.weight").unwrap().item() - step(w, gw)).abs() < 1e-15);
    assert!((t.critic.params.get("layer0.bias").unwrap().item() - step(b, gb)).abs() < 1e-15);
    let bce = (1.0 + (-lr_).exp()).ln() + (1.0 + lf.exp()).ln();
    assert!((report.loss - bce).abs() < 1e-12);
    assert!(report.penalty.is_none());
}

fn toy_data(n: usize) -> Tensor {
    sample_gaussian_mixture(
        &GaussianMixtureSpec {
            seed: 1,
            ..Default::default()
        },
        n,
    )
    .unwrap()
}

fn small_specs() -> (NetworkSpec, NetworkSpec) {
    (
        NetworkSpec::dense(&[2, 16, 2], Activation::LeakyRelu, Activation::Identity).unwrap(),
        NetworkSpec::dense(&[2, 16, 1], Activation::LeakyRelu, Activation::Identity).unwrap(),
    )
}

#[test]
fn schedule_and_penalty_sign() {
    let (g, c) = small_specs();
    let mut config = GanConfig::new(Variant::WganGp);
    config.epochs = 2;
    config.batch_size = 16;
    let out = train_wgan_gp::<f64>(&toy_data(64), g, c, config).unwrap();
    let log = &out.log;
    assert_eq!(log.generator_updates(), 2 * 4);
    assert_eq!(log.critic_updates(), 5 * log.generator_updates());
    // Every generator row is preceded by exactly five critic rows.
    for (i, r) in log.rows.iter().enumerate() {
        assert_eq!(r.update_index, i);
        assert_eq!(r.gen_loss.is_some(), i % 6 == 5);
    }
    assert!(log.penalties().iter().all(|&p| p >= 0.0));
    assert!(log
        .to_csv(true)
        .starts_with("update_index,epoch,critic_loss,penalty,gen_loss,wall_ms\n"));
}

#[test]
fn clipping_keeps_critic_in_box() {
    let (g, c) = small_specs();
    let mut config = GanConfig::new(Variant::WganClip);
    config.batch_size = 16;
    let mut t = GanTrainer::<f64>::new(config, g, c, &toy_data(256)).unwrap();
    for _ in 0..20 {
        t.critic_step().unwrap();
        for v in t.critic.params.trainable().values() {
            assert!(v.data().iter().all(|x| x.abs() <= 0.01));
        }
    }
}

#[test]
fn runs_are_deterministic() {
    let run = || {
        let (g, c) = small_specs();
        let mut config = GanConfig::new(Variant::WganGp);
        config.epochs = 1;
        config.batch_size = 16;
        config.seed = 42;
        train_wgan_gp::<f64>(&toy_data(64), g, c, config).unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.log.to_csv(false), b.log.to_csv(false));
    assert_eq!(
        encode_checkpoint(&a.generator.params),
        encode_checkpoint(&b.generator.params)
    );
    assert_eq!(
        encode_checkpoint(&a.critic.params),
        encode_checkpoint(&b.critic.params)
    );
}

#[test]
fn divergence_guard_aborts() {
    let (g, c) = small_specs();
    let mut config = GanConfig::new(Variant::WganGp);
    config.divergence_limit = 1e-9;
    let err = train_wgan_gp::<f64>(&toy_data(128), g, c, config).unwrap_err();
    assert!(matches!(err, Error::Diverged { update: 0, .. }), "{err}");
}

#[test]
fn preconditions_are_enforced() {
    let (g, c) = small_specs();
    let data = toy_data(32);
    assert!(
        GanTrainer::<f64>::new(GanConfig::new(Variant::Gan), g.clone(), c.clone(), &data).is_err()
    );
    let sig = NetworkSpec::dense(&[2, 4, 1], Activation::LeakyRelu, Activation::Sigmoid).unwrap();
    assert!(
        GanTrainer::<f64>::new(GanConfig::new(Variant::WganGp), g.clone(), sig, &data).is_err()
    );
    let mut bad = GanConfig::new(Variant::WganGp);
    bad.critic_steps = 0;
    assert!(GanTrainer::<f64>::new(bad, g, c, &data).is_err());
}

#[test]
fn f32_training_runs() {
    let (g, c) = small_specs();
    let mut config = GanConfig::new(Variant::WganGp);
    config.epochs = 1;
    config.batch_size = 16;
    let out = train_wgan_gp::<f32>(&toy_data(64), g, c, config).unwrap();
    assert_eq!(out.log.generator_updates(), 4);
}

#[test]
fn js_divergence_cases() {
    let a = Tensor::from_rows(&[vec![0.0, 0.0], vec![0.1, 0.1], vec![0.9, 0.9]]).unwrap();
    assert!(js_divergence_estimate(&a, &a, 8).unwrap() < 1e-6);
    let left = Tensor::from_rows(&[vec![0.0, 0.0], vec![0.1, 0.0]]).unwrap();
    let right = Tensor::from_rows(&[vec![1.0, 1.0], vec![0.9, 1.0]]).unwrap();
    let d = js_divergence_estimate(&left, &right, 2).unwrap();
    assert!((d - std::f64::consts::LN_2).abs() < 1e-6, "{d}");
    // P = (3/4, 1/4), Q = (1/4, 3/4) over two cells on the x axis.
    let p = Tensor::from_rows(&[
        vec![0.0, 0.0],
        vec![0.0, 0.0],
        vec![0.0, 0.0],
        vec![1.0, 0.0],
    ])
    .unwrap();
    let q = Tensor::from_rows(&[
        vec![0.0, 0.0],
        vec![1.0, 0.0],
        vec![1.0, 0.0],
        vec![1.0, 0.0],
    ])
    .unwrap();
    let kl = |x: f64, y: f64| x * (x / y).ln();
    let closed = 0.5 * (kl(0.75, 0.5) + kl(0.25, 0.5)) + 0.5 * (kl(0.25, 0.5) + kl(0.75, 0.5));
    let est = js_divergence_estimate(&p, &q, 2).unwrap();
    assert!((est - closed).abs() < 1e-6, "{est} vs {closed}");
    assert_eq!(est, js_divergence_estimate(&q, &p, 2).unwrap());
    assert!(js_divergence_estimate(&p, &q, 1).is_err());
}

#[test]
fn coverage_cases() {
    let spec = GaussianMixtureSpec::default();
    let centers = spec.centers();
    let at = |j: usize, n: usize| vec![vec![centers[j][0], centers[j][1]]; n];
    let one = Tensor::from_rows(&at(1, 70)).unwrap();
    assert_eq!(mode_coverage(&one, &centers, 0.15).unwrap().covered, 1);
    let all: Vec<Vec<f64>> = (0..7).flat_map(|j| at(j, 10)).collect();
    assert_eq!(
        mode_coverage(&Tensor::from_rows(&all).unwrap(), &centers, 0.15)
            .unwrap()
            .covered,
        7
    );
    // 2 of 100 samples at mode 3: exactly 2% is covered.
    let mut edge = at(0, 98);
    edge.extend(at(3, 2));
    let cov = mode_coverage(&Tensor::from_rows(&edge).unwrap(), &centers, 0.15).unwrap();
    assert_eq!(cov.covered, 2);
    assert_eq!(cov.fractions[3], 0.02);
}

#[test]
fn optimal_discriminator_cases() {
    assert_eq!(optimal_discriminator(0.3, 0.3).unwrap(), 0.5);
    assert_eq!(optimal_discriminator(0.3, 0.0).unwrap(), 1.0);
    assert!(optimal_discriminator(0.0, 0.0).is_err());
    let s = Tensor::from_rows(&[vec![0.0, 0.0]]).unwrap();
    let k = kde_density(&s, 0.05, 0.0, 0.0);
    assert!((k - 1.0 / (2.0 * std::f64::consts::PI * 0.0025)).abs() < 1e-9);
}
