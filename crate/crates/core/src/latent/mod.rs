//! Recovering latent codes: gradient-descent inversion of a frozen
//! generator and a post-hoc encoder trained under it.

mod encoder;
mod inversion;

pub use encoder::{reconstruct, train_encoder, EncoderBundle, EncoderConfig, EncoderLog};
pub use inversion::{invert_batch, invert_generator, Inversion, InversionConfig, Reconstruction};
