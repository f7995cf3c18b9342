//! Precision-recall analysis of a score vector: curve, average precision,
//! boxplot summaries and an SVG plot.
//!
//! `cargo run --release --example pr_evaluation [out.svg]`

use rand::Rng;
use wgad::eval::{auprc, boxplot_stats, pr_curve, pr_curve_svg};
use wgad::rng::{stream_rng, Stream};

fn main() -> wgad::Result<()> {
    let out = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "pr_curve.svg".into());
    let mut rng = stream_rng(5, Stream::Evaluation);
    let labels: Vec<u8> = (0..2000).map(|i| u8::from(i % 5 == 0)).collect();
    let informative: Vec<f64> = labels
        .iter()
        .map(|&l| rng.random::<f64>() + 0.6 * f64::from(l))
        .collect();
    let random: Vec<f64> = labels.iter().map(|_| rng.random::<f64>()).collect();

    let mut series = Vec::new();
    for (name, scores) in [("informative", &informative), ("random", &random)] {
        let curve = pr_curve(scores, &labels)?;
        let b = boxplot_stats(scores, &labels)?;
        println!(
            "{name:<12} AP {:.3} (prevalence {:.2})  median normal {:.3} abnormal {:.3}",
            auprc(&curve),
            curve.prevalence(),
            b.normal.median,
            b.abnormal.median
        );
        series.push((name.to_string(), curve));
    }
    std::fs::write(&out, pr_curve_svg(&series, "Synthetic scores"))?;
    println!("plot written to {out}");
    Ok(())
}
