use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, sub_stream, Stream};
use crate::tensor::Tensor;

/// Monte-Carlo draws used to locate the density threshold.
pub const THRESHOLD_DRAWS: usize = 1_000_000;
/// Mixture mass enclosed by the normal region.
pub const THRESHOLD_MASS: f64 = 0.99;

/// Equal-weight isotropic Gaussians centred on a circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixtureSpec {
    pub modes: usize,
    pub radius: f64,
    pub sigma: f64,
    pub phase: f64,
    pub seed: u64,
}

impl Default for GaussianMixtureSpec {
    fn default() -> Self {
        Self {
            modes: 7,
            radius: 1.0,
            sigma: 0.05,
            phase: 0.0,
            seed: 0,
        }
    }
}

impl GaussianMixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.modes == 0 {
            return Err(Error::invalid("mixture needs at least one mode"));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::invalid("mixture radius must be positive"));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("mixture sigma must be positive"));
        }
        Ok(())
    }

    pub fn centers(&self) -> Vec<[f64; 2]> {
        (0..self.modes)
            .map(|j| {
                let a = self.phase + 2.0 * PI * j as f64 / self.modes as f64;
                [self.radius * a.cos(), self.radius * a.sin()]
            })
            .collect()
    }

    /// Mixture density at `(x, y)`.
    pub fn density(&self, x: f64, y: f64) -> f64 {
        let s2 = self.sigma * self.sigma;
        let norm = 1.0 / (2.0 * PI * s2 * self.modes as f64);
        self.centers()
            .iter()
            .map(|c| {
                let d2 = (x - c[0]).powi(2) + (y - c[1]).powi(2);
                (-d2 / (2.0 * s2)).exp()
            })
            .sum::<f64>()
            * norm
    }

    /// Draws `n` points from `rng`.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Tensor {
        let centers = self.centers();
        let mut data = Vec::with_capacity(2 * n);
        for _ in 0..n {
            let c = centers[rng.random_range(0..self.modes)];
            let dx: f64 = StandardNormal.sample(rng);
            let dy: f64 = StandardNormal.sample(rng);
            data.push(c[0] + self.sigma * dx);
            data.push(c[1] + self.sigma * dy);
        }
        Tensor::from_parts(vec![n, 2], data)
    }

    /// Density below which a point is anomalous: the `1 - THRESHOLD_MASS`
    /// quantile of the density over `THRESHOLD_DRAWS` seeded mixture draws.
    pub fn density_threshold(&self) -> f64 {
        let mut rng = sub_stream(self.seed, Stream::Data, 0x7e5);
        let pts = self.sample_with(&mut rng, THRESHOLD_DRAWS);
        let mut dens: Vec<f64> = (0..THRESHOLD_DRAWS)
            .map(|i| self.density(pts.get(i, 0), pts.get(i, 1)))
            .collect();
        let k = ((1.0 - THRESHOLD_MASS) * THRESHOLD_DRAWS as f64) as usize;
        let (_, kth, _) = dens.select_nth_unstable_by(k, |a, b| a.total_cmp(b));
        *kth
    }
}

/// `n` seeded mixture samples (`n x 2`).
pub fn sample_gaussian_mixture(spec: &GaussianMixtureSpec, n: usize) -> Result<Tensor> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::Empty("requested zero mixture samples".into()));
    }
    Ok(spec.sample_with(&mut stream_rng(spec.seed, Stream::Data), n))
}

/// Labels points against a precomputed density threshold.
#[derive(Debug, Clone, Copy)]
pub struct ToyLabeler {
    pub spec: GaussianMixtureSpec,
    pub threshold: f64,
}

impl ToyLabeler {
    pub fn new(spec: GaussianMixtureSpec) -> Result<Self> {
        spec.validate()?;
        Ok(Self {
            spec,
            threshold: spec.density_threshold(),
        })
    }

    pub fn label(&self, x: f64, y: f64) -> u8 {
        u8::from(self.spec.density(x, y) < self.threshold)
    }

    pub fn label_all(&self, points: &Tensor) -> Vec<u8> {
        (0..points.rows())
            .map(|i| self.label(points.get(i, 0), points.get(i, 1)))
            .collect()
    }
}

/// 1 for points whose mixture density falls below the 99%-mass threshold.
pub fn toy_anomaly_label(spec: &GaussianMixtureSpec, points: &Tensor) -> Result<Vec<u8>> {
    if points.cols() != 2 {
        return Err(Error::Shape(format!(
            "toy points need 2 columns, got {}",
            points.cols()
        )));
    }
    Ok(ToyLabeler::new(*spec)?.label_all(points))
}
