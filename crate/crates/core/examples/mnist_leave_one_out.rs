//! One digit held out as the anomaly: 14x14 images, dense WGAN-GP, a
//! post-hoc encoder, and the encoder reconstruction error as score.
//!
//! `cargo run --release --example mnist_leave_one_out <mnist dir> [digit] [epochs]`

use std::path::PathBuf;

use wgad::data::{downsample_images, leave_one_digit_out_split, load_mnist_dir};
use wgad::eval::{auprc, pr_curve};
use wgad::gan::{train_wgan_gp, GanConfig, Variant};
use wgad::latent::{train_encoder, EncoderConfig};
use wgad::nn::{Activation, NetworkSpec};
use wgad::scoring::encoder_mse_score;

fn main() -> wgad::Result<()> {
    let mut args = std::env::args().skip(1);
    let dir = PathBuf::from(args.next().unwrap_or_else(|| "data/mnist-5k".into()));
    let digit: u8 = args.next().map_or(0, |s| s.parse().expect("digit"));
    let epochs: usize = args.next().map_or(10, |s| s.parse().expect("epochs"));

    let (images, labels) = load_mnist_dir(&dir)?;
    let images = downsample_images(&images, 2)?;
    let (train, test) = leave_one_digit_out_split(&images, &labels, digit, 1)?;
    println!(
        "train {} normal rows; test {} rows, prevalence {:.3}",
        train.len(),
        test.len(),
        test.prevalence()
    );

    let d = train.width();
    let latent = 64;
    let gen = NetworkSpec::dense(
        &[latent, 256, 512, d],
        Activation::LeakyRelu,
        Activation::Sigmoid,
    )?;
    let critic = NetworkSpec::dense(
        &[d, 512, 256, 1],
        Activation::LeakyRelu,
        Activation::Identity,
    )?;
    let mut config = GanConfig::new(Variant::WganGp);
    config.latent_dim = latent;
    config.epochs = epochs;
    config.seed = 1;
    let gan = train_wgan_gp::<f32>(&train.samples, gen, critic, config)?;

    let encoder = NetworkSpec::image_encoder(d, latent);
    let enc_cfg = EncoderConfig {
        epochs,
        seed: 1,
        ..Default::default()
    };
    let bundle = train_encoder(&gan.generator, encoder, &train.samples, &enc_cfg)?;
    let scores = encoder_mse_score(&bundle, &test.samples.cast())?;
    let curve = pr_curve(&scores, &test.labels)?;
    println!("digit {digit} abnormal: AUPRC {:.3}", auprc(&curve));
    Ok(())
}
