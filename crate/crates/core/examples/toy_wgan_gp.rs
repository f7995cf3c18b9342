//! WGAN-GP on the 7-gaussian ring, reporting mode coverage per epoch.
//!
//! `cargo run --release --example toy_wgan_gp [epochs] [seed]`

use wgad::data::{sample_gaussian_mixture, GaussianMixtureSpec};
use wgad::gan::{mode_coverage, GanConfig, GanTrainer, Variant};
use wgad::nn::NetworkSpec;
use wgad::rng::{stream_rng, Stream};

fn main() -> wgad::Result<()> {
    let mut args = std::env::args().skip(1);
    let epochs: usize = args.next().map_or(5, |s| s.parse().expect("epochs"));
    let seed: u64 = args.next().map_or(1, |s| s.parse().expect("seed"));

    let spec = GaussianMixtureSpec {
        seed,
        ..Default::default()
    };
    let data = sample_gaussian_mixture(&spec, 20_000)?;
    let mut config = GanConfig::new(Variant::WganGp);
    config.seed = seed;
    config.epochs = epochs;
    let mut trainer = GanTrainer::<f64>::new(
        config,
        NetworkSpec::toy_generator(2),
        NetworkSpec::toy_critic(),
        &data,
    )?;
    for epoch in 0..epochs {
        trainer.train_epoch()?;
        let samples = trainer
            .generator
            .sample(&mut stream_rng(seed, Stream::Evaluation), 10_000)?;
        let cov = mode_coverage(&samples, &spec.centers(), 3.0 * spec.sigma)?;
        let critic = trainer.log.epoch_critic_means()[epoch];
        println!(
            "epoch {epoch:>3}  modes {}/7  critic surrogate {critic:+.4}",
            cov.covered
        );
    }
    Ok(())
}
