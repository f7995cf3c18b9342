//! Dense feed-forward networks.

mod checkpoint;
mod network;
mod optim;
mod params;

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use network::{BatchNormStats, Bound, ForwardPass, Network, BN_EPS, BN_MOMENTUM};
pub use optim::{weight_clip, AdamConfig, Optimizer, OptimizerConfig, RmsPropConfig};
pub use params::ParamStore;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Negative slope of the leaky rectifier.
pub const LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Identity,
    Tanh,
    Sigmoid,
    LeakyRelu,
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "identity" | "linear" => Ok(Self::Identity),
            "tanh" => Ok(Self::Tanh),
            "sigmoid" => Ok(Self::Sigmoid),
            "leaky_relu" => Ok(Self::LeakyRelu),
            other => Err(Error::invalid(format!("unknown activation `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Batch norm uses minibatch statistics and updates running statistics.
    Train,
    /// Batch norm uses running statistics.
    Infer,
}

/// One affine layer, optionally batch-normalized before its activation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub input: usize,
    pub output: usize,
    pub activation: Activation,
    pub batch_norm: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkSpec {
    layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    pub fn new(layers: Vec<LayerSpec>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::invalid("network needs at least one layer"));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.input == 0 || l.output == 0 {
                return Err(Error::invalid(format!("layer {i} has a zero width")));
            }
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].output != pair[1].input {
                return Err(Error::invalid(format!(
                    "layer {i} outputs {} but layer {} expects {}",
                    pair[0].output,
                    i + 1,
                    pair[1].input
                )));
            }
        }
        let out = layers.last().expect("non-empty").activation;
        if out == Activation::LeakyRelu {
            return Err(Error::invalid(
                "output activation must be identity, sigmoid or tanh",
            ));
        }
        Ok(Self { layers })
    }

    /// Fully connected stack through `widths` (input first), `hidden` between
    /// layers and `output` at the end. No batch norm.
    pub fn dense(widths: &[usize], hidden: Activation, output: Activation) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::invalid("need at least input and output widths"));
        }
        let n = widths.len() - 1;
        let layers = (0..n)
            .map(|i| LayerSpec {
                input: widths[i],
                output: widths[i + 1],
                activation: if i + 1 == n { output } else { hidden },
                batch_norm: false,
            })
            .collect();
        Self::new(layers)
    }

    /// Sets the batch-norm flag on one layer.
    pub fn with_batch_norm(mut self, layer: usize) -> Result<Self> {
        let n = self.layers.len();
        self.layers
            .get_mut(layer)
            .ok_or_else(|| Error::invalid(format!("layer {layer} out of range (have {n})")))?
            .batch_norm = true;
        Ok(self)
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].input
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().expect("non-empty").output
    }

    pub fn output_activation(&self) -> Activation {
        self.layers.last().expect("non-empty").activation
    }

    pub fn has_batch_norm(&self) -> bool {
        self.layers.iter().any(|l| l.batch_norm)
    }

    /// Toy generator: latent-128-128-2, leaky hidden units, linear output.
    pub fn toy_generator(latent: usize) -> Self {
        Self::dense(
            &[latent, 128, 128, 2],
            Activation::LeakyRelu,
            Activation::Identity,
        )
        .expect("valid")
    }

    /// Toy critic: 2-128-128-1, linear output.
    pub fn toy_critic() -> Self {
        Self::dense(
            &[2, 128, 128, 1],
            Activation::LeakyRelu,
            Activation::Identity,
        )
        .expect("valid")
    }

    /// Image encoder d-512-256-latent whose output passes through batch norm.
    pub fn image_encoder(input: usize, latent: usize) -> Self {
        Self::dense(
            &[input, 512, 256, latent],
            Activation::LeakyRelu,
            Activation::Identity,
        )
        .and_then(|s| s.with_batch_norm(2))
        .expect("valid")
    }

    /// Image generator latent-256-512-d with sigmoid pixels.
    pub fn image_generator(latent: usize, output: usize) -> Self {
        Self::dense(
            &[latent, 256, 512, output],
            Activation::LeakyRelu,
            Activation::Sigmoid,
        )
        .expect("valid")
    }

    /// Image critic d-512-256-1.
    pub fn image_critic(input: usize) -> Self {
        Self::dense(
            &[input, 512, 256, 1],
            Activation::LeakyRelu,
            Activation::Identity,
        )
        .expect("valid")
    }

    /// Names and shapes of every tensor a parameter store for this spec holds,
    /// as `(name, shape, trainable)`.
    pub fn param_layout(&self) -> Vec<(String, Vec<usize>, bool)> {
        let mut out = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            out.push((format!("layer{i}.weight"), vec![l.input, l.output], true));
            out.push((format!("layer{i}.bias"), vec![1, l.output], true));
            if l.batch_norm {
                out.push((format!("layer{i}.bn.scale"), vec![1, l.output], true));
                out.push((format!("layer{i}.bn.shift"), vec![1, l.output], true));
                out.push((
                    format!("layer{i}.bn.running_mean"),
                    vec![1, l.output],
                    false,
                ));
                out.push((format!("layer{i}.bn.running_var"), vec![1, l.output], false));
            }
        }
        out
    }
}
