//! Anomaly detection with Wasserstein GANs on dense networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`autodiff`]: a reverse-mode tape with differentiable input gradients,
//!   enough for gradient penalties (double backprop).
//! * [`nn`]: dense networks, batch normalization, Adam/RMSprop, weight
//!   clipping, and the `WGAD` checkpoint format.
//! * [`gan`]: standard GAN, WGAN with clipping, and WGAN-GP trainers plus
//!   distribution diagnostics (JS divergence, mode coverage).
//! * [`latent`]: generator inversion by gradient descent and post-hoc
//!   encoder training.
//! * [`scoring`]: critic-interval, AnoGAN-style, BiGAN-style and encoder-MSE
//!   anomaly scores.
//! * [`data`]: the Gaussian-ring toy, MNIST IDX files, UCI-HAR windows,
//!   leave-one-class-out splits and recurrence (distance) plots.
//! * [`eval`]: precision-recall curves, average precision and boxplot
//!   statistics.
//! * [`experiment`]: configuration, run manifests and the commands behind
//!   the `wgad` binary.

pub mod autodiff;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod fsutil;
pub mod gan;
pub mod latent;
pub mod nn;
pub mod real;
pub mod rng;
pub mod scoring;
pub mod tensor;

pub use autodiff::{Gradient, NodeId, Tape};
pub use error::{Error, Result};
pub use real::Real;
pub use tensor::Tensor;
