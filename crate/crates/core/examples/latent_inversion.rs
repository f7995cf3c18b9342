//! Recovering latent codes of a trained toy generator by gradient descent
//! with a Gaussian prior, then comparing residuals of normal and
//! off-ring points.
//!
//! `cargo run --release --example latent_inversion [epochs]`

use wgad::data::{sample_gaussian_mixture, GaussianMixtureSpec};
use wgad::gan::{train_wgan_gp, GanConfig, Variant};
use wgad::latent::{invert_batch, InversionConfig};
use wgad::nn::NetworkSpec;
use wgad::Tensor;

fn main() -> wgad::Result<()> {
    let epochs: usize = std::env::args()
        .nth(1)
        .map_or(3, |s| s.parse().expect("epochs"));
    let spec = GaussianMixtureSpec {
        seed: 2,
        ..Default::default()
    };
    let data = sample_gaussian_mixture(&spec, 20_000)?;
    let mut config = GanConfig::new(Variant::WganGp);
    config.epochs = epochs;
    config.seed = 2;
    let gan = train_wgan_gp::<f64>(
        &data,
        NetworkSpec::toy_generator(2),
        NetworkSpec::toy_critic(),
        config,
    )?;

    let queries = Tensor::from_rows(&[
        vec![1.0, 0.0],
        spec.centers()[3].to_vec(),
        vec![0.0, 0.0],
        vec![1.4, 1.4],
    ])?;
    let found = invert_batch(&gan.generator, &queries, &InversionConfig::default())?;
    let zs: Vec<&Tensor> = found.iter().map(|f| &f.z).collect();
    let recon = gan.generator.infer(&Tensor::vstack(&zs)?)?;
    for (i, f) in found.iter().enumerate() {
        println!(
            "x = ({:+.2}, {:+.2})  z* = ({:+.3}, {:+.3})  G(z*) = ({:+.3}, {:+.3})  loss {:.4}",
            queries.get(i, 0),
            queries.get(i, 1),
            f.z.get(0, 0),
            f.z.get(0, 1),
            recon.get(i, 0),
            recon.get(i, 1),
            f.loss
        );
    }
    Ok(())
}
