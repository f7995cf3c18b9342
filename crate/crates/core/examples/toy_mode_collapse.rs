//! Standard GAN, clipped WGAN and WGAN-GP side by side on the ring:
//! mode coverage and a histogram JS divergence to fresh data.
//!
//! `cargo run --release --example toy_mode_collapse [epochs] [seed]`

use wgad::data::{sample_gaussian_mixture, GaussianMixtureSpec};
use wgad::gan::{js_divergence_estimate, mode_coverage, train_gan, GanConfig, Variant};
use wgad::nn::{Activation, NetworkSpec};
use wgad::rng::{stream_rng, Stream};

fn main() -> wgad::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().map_or(3, |s| s.parse().expect("epochs"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));

    let spec = GaussianMixtureSpec {
        seed,
        ..Default::default()
    };
    let data = sample_gaussian_mixture(&spec, 20_000)?;
    let reference = sample_gaussian_mixture(
        &GaussianMixtureSpec {
            seed: seed + 1000,
            ..spec
        },
        10_000,
    )?;
    for variant in [Variant::Gan, Variant::WganClip, Variant::WganGp] {
        let mut config = GanConfig::new(variant);
        config.seed = seed;
        config.epochs = epochs;
        let critic_out = if variant == Variant::Gan {
            Activation::Sigmoid
        } else {
            Activation::Identity
        };
        let critic = NetworkSpec::dense(&[2, 128, 128, 1], Activation::LeakyRelu, critic_out)?;
        let trained = train_gan::<f64>(&data, NetworkSpec::toy_generator(2), critic, config)?;
        let samples = trained
            .generator
            .sample(&mut stream_rng(seed, Stream::Evaluation), 10_000)?;
        let cov = mode_coverage(&samples, &spec.centers(), 3.0 * spec.sigma)?;
        let js = js_divergence_estimate(&reference, &samples, 40)?;
        println!(
            "{:<10} modes {}/7  JS {js:.3} nats",
            variant.name(),
            cov.covered
        );
    }
    Ok(())
}
