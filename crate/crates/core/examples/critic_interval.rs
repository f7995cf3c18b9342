//! The critic-interval detector: fit [min, max] of critic values on the
//! training data, score held-out points by their distance outside it.
//!
//! `cargo run --release --example critic_interval [epochs]`

use rand::Rng;
use wgad::data::{sample_gaussian_mixture, GaussianMixtureSpec, ToyLabeler};
use wgad::eval::{auprc, pr_curve};
use wgad::gan::{train_wgan_gp, GanConfig, Variant};
use wgad::nn::NetworkSpec;
use wgad::rng::{stream_rng, Stream};
use wgad::scoring::{critic_score, fit_critic_interval};
use wgad::Tensor;

fn main() -> wgad::Result<()> {
    let epochs: usize = std::env::args()
        .nth(1)
        .map_or(5, |s| s.parse().expect("epochs"));
    let spec = GaussianMixtureSpec {
        seed: 1,
        ..Default::default()
    };
    let train = sample_gaussian_mixture(&spec, 20_000)?;
    let mut config = GanConfig::new(Variant::WganGp);
    config.epochs = epochs;
    config.seed = 1;
    let trained = train_wgan_gp::<f64>(
        &train,
        NetworkSpec::toy_generator(2),
        NetworkSpec::toy_critic(),
        config,
    )?;

    let labeler = ToyLabeler::new(spec)?;
    let mut rng = stream_rng(7, Stream::Evaluation);
    let normal = sample_gaussian_mixture(&GaussianMixtureSpec { seed: 7, ..spec }, 1000)?;
    let mut rows: Vec<Vec<f64>> = (0..normal.rows()).map(|i| normal.row(i).to_vec()).collect();
    let mut labels: Vec<u8> = labeler.label_all(&normal);
    while labels.len() < 2000 {
        let (x, y) = (rng.random_range(-1.5..=1.5), rng.random_range(-1.5..=1.5));
        if labeler.label(x, y) == 1 {
            rows.push(vec![x, y]);
            labels.push(1);
        }
    }
    let test = Tensor::from_rows(&rows)?;

    let interval = fit_critic_interval(&trained.critic, &train)?;
    let scores = critic_score(&trained.critic, &interval, &test)?;
    let curve = pr_curve(&scores, &labels)?;
    println!(
        "critic interval [{:.4}, {:.4}]",
        interval.lower, interval.upper
    );
    println!(
        "AUPRC {:.3} at prevalence {:.3}",
        auprc(&curve),
        curve.prevalence()
    );
    Ok(())
}
