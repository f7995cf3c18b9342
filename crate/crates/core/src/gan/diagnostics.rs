//! Sample-based checks on 2D generators.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Share of samples a mode needs to count as covered.
pub const COVERAGE_FRACTION: f64 = 0.02;

const PSEUDOCOUNT: f64 = 1e-9;

fn check_2d(t: &Tensor, what: &str) -> Result<()> {
    if t.rows() == 0 {
        return Err(Error::Empty(format!("{what} sample set")));
    }
    if t.cols() != 2 {
        return Err(Error::Shape(format!(
            "{what} samples must be 2-dimensional, got {}",
            t.cols()
        )));
    }
    Ok(())
}

fn histogram(t: &Tensor, lo: [f64; 2], span: [f64; 2], bins: usize) -> Vec<f64> {
    let mut h = vec![PSEUDOCOUNT; bins * bins];
    let cell = |v: f64, a: usize| -> usize {
        if span[a] == 0.0 {
            0
        } else {
            (((v - lo[a]) / span[a] * bins as f64) as usize).min(bins - 1)
        }
    };
    for i in 0..t.rows() {
        h[cell(t.get(i, 0), 0) * bins + cell(t.get(i, 1), 1)] += 1.0;
    }
    let total: f64 = h.iter().sum();
    h.iter_mut().for_each(|v| *v /= total);
    h
}

/// Jensen-Shannon divergence (nats) between 2D histograms of `p` and `q`
/// on their shared bounding box with `bins` cells per axis.
pub fn js_divergence_estimate(p: &Tensor, q: &Tensor, bins: usize) -> Result<f64> {
    check_2d(p, "first")?;
    check_2d(q, "second")?;
    if bins < 2 {
        return Err(Error::invalid("need at least 2 bins per axis"));
    }
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for t in [p, q] {
        for i in 0..t.rows() {
            for a in 0..2 {
                lo[a] = lo[a].min(t.get(i, a));
                hi[a] = hi[a].max(t.get(i, a));
            }
        }
    }
    let span = [hi[0] - lo[0], hi[1] - lo[1]];
    let hp = histogram(p, lo, span, bins);
    let hq = histogram(q, lo, span, bins);
    let mut js = 0.0;
    for (a, b) in hp.iter().zip(&hq) {
        let m = 0.5 * (a + b);
        js += 0.5 * a * (a / m).ln() + 0.5 * b * (b / m).ln();
    }
    Ok(js.clamp(0.0, std::f64::consts::LN_2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeCoverage {
    pub covered: usize,
    /// Share of all samples that are nearest to, and within the radius of,
    /// each center.
    pub fractions: Vec<f64>,
}

/// Counts centers that attract at least 2% of the samples within `radius`.
pub fn mode_coverage(samples: &Tensor, centers: &[[f64; 2]], radius: f64) -> Result<ModeCoverage> {
    if centers.is_empty() {
        return Err(Error::invalid("no centers"));
    }
    if !(radius > 0.0) {
        return Err(Error::invalid("radius must be positive"));
    }
    check_2d(samples, "generated")?;
    let mut counts = vec![0usize; centers.len()];
    for i in 0..samples.rows() {
        let (x, y) = (samples.get(i, 0), samples.get(i, 1));
        let (j, d2) = centers
            .iter()
            .map(|c| (x - c[0]).powi(2) + (y - c[1]).powi(2))
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        if d2 <= radius * radius {
            counts[j] += 1;
        }
    }
    let n = samples.rows();
    let covered = counts
        .iter()
        .filter(|&&c| c as f64 >= COVERAGE_FRACTION * n as f64 - 1e-9)
        .count();
    Ok(ModeCoverage {
        covered,
        fractions: counts.iter().map(|&c| c as f64 / n as f64).collect(),
    })
}

/// Gaussian kernel density of `samples` at `(x, y)`.
pub fn kde_density(samples: &Tensor, bandwidth: f64, x: f64, y: f64) -> f64 {
    let h2 = bandwidth * bandwidth;
    let norm = 1.0 / (2.0 * PI * h2 * samples.rows() as f64);
    (0..samples.rows())
        .map(|i| {
            let d2 = (x - samples.get(i, 0)).powi(2) + (y - samples.get(i, 1)).powi(2);
            (-d2 / (2.0 * h2)).exp()
        })
        .sum::<f64>()
        * norm
}

/// `p_r / (p_r + p_g)`.
pub fn optimal_discriminator(p_real: f64, p_gen: f64) -> Result<f64> {
    if p_real < 0.0 || p_gen < 0.0 || !p_real.is_finite() || !p_gen.is_finite() {
        return Err(Error::invalid("densities must be finite and non-negative"));
    }
    if p_real + p_gen == 0.0 {
        return Err(Error::invalid("both densities are zero"));
    }
    Ok(p_real / (p_real + p_gen))
}
