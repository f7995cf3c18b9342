//! Activity recognition windows with one activity held out, dense WGAN-GP
//! and encoder on the raw total-acceleration channels. Without a dataset
//! path a synthetic fixture is used.
//!
//! `cargo run --release --example har_fully_connected [har root] [epochs]`

use wgad::data::{
    har_anomaly_split, load_har_root, synthetic_har, Activity, HarFeatures, TOTAL_ACC,
};
use wgad::eval::{auprc, pr_curve};
use wgad::gan::{train_wgan_gp, GanConfig, Variant};
use wgad::latent::{train_encoder, EncoderConfig};
use wgad::nn::{Activation, NetworkSpec};
use wgad::scoring::encoder_mse_score;

fn main() -> wgad::Result<()> {
    let mut args = std::env::args().skip(1);
    let root = args.next();
    let epochs: usize = args.next().map_or(10, |s| s.parse().expect("epochs"));
    let windows = match &root {
        Some(r) => load_har_root(r.as_ref())?,
        None => synthetic_har(150, 1),
    };
    let (train, test, _) =
        har_anomaly_split(&windows, Activity::Laying, 1, &TOTAL_ACC, HarFeatures::Raw)?;
    println!(
        "train {} windows of width {}; test prevalence {:.3}",
        train.len(),
        train.width(),
        test.prevalence()
    );

    let d = train.width();
    let latent = 32;
    let gen = NetworkSpec::dense(
        &[latent, 256, 512, d],
        Activation::LeakyRelu,
        Activation::Identity,
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

    let enc_cfg = EncoderConfig {
        epochs,
        seed: 1,
        ..Default::default()
    };
    let bundle = train_encoder(
        &gan.generator,
        NetworkSpec::image_encoder(d, latent),
        &train.samples,
        &enc_cfg,
    )?;
    let scores = encoder_mse_score(&bundle, &test.samples.cast())?;
    println!(
        "laying abnormal: AUPRC {:.3}",
        auprc(&pr_curve(&scores, &test.labels)?)
    );
    Ok(())
}
