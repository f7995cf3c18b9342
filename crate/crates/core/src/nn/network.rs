use std::collections::BTreeMap;

use super::{Activation, Mode, NetworkSpec, ParamStore, LEAKY_SLOPE};
use crate::autodiff::{NodeId, Tape};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::Tensor;

/// Added to the variance before normalizing.
pub const BN_EPS: f64 = 1e-8;
/// Weight of the previous running statistic in each update.
pub const BN_MOMENTUM: f64 = 0.99;

/// Parameter nodes of one network on a tape.
#[derive(Debug, Clone)]
pub struct Bound {
    nodes: BTreeMap<String, NodeId>,
}

impl Bound {
    pub fn node(&self, name: &str) -> NodeId {
        *self
            .nodes
            .get(name)
            .unwrap_or_else(|| panic!("parameter `{name}` not bound"))
    }
}

/// Minibatch statistics of one batch-norm layer (biased variance).
#[derive(Debug, Clone)]
pub struct BatchNormStats<T: Real = f64> {
    pub layer: usize,
    pub mean: Tensor<T>,
    pub var: Tensor<T>,
}

#[derive(Debug, Clone)]
pub struct ForwardPass<T: Real = f64> {
    pub output: NodeId,
    /// Pre-activation of the last layer.
    pub logits: NodeId,
    /// Post-activation output of every hidden layer, in order.
    pub hidden: Vec<NodeId>,
    pub bn_stats: Vec<BatchNormStats<T>>,
}

/// An architecture together with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T: Real = f64> {
    pub spec: NetworkSpec,
    pub params: ParamStore<T>,
}

impl<T: Real> Network<T> {
    pub fn new(spec: NetworkSpec, seed: u64) -> Self {
        let params = ParamStore::init(&spec, seed);
        Self { spec, params }
    }

    /// Initialized on init sub-stream `index` of `seed`.
    pub fn new_indexed(spec: NetworkSpec, seed: u64, index: u64) -> Self {
        let params = ParamStore::init_indexed(&spec, seed, index);
        Self { spec, params }
    }

    pub fn from_params(spec: NetworkSpec, params: ParamStore<T>) -> Result<Self> {
        params.validate(&spec)?;
        Ok(Self { spec, params })
    }

    /// Places the parameters on `tape`: trainable tensors as named parameter
    /// leaves when `trainable` is set, constants otherwise. Buffers are
    /// always constants. Only one trainable network may be bound per tape.
    pub fn bind(&self, tape: &mut Tape<T>, trainable: bool) -> Bound {
        let mut nodes = BTreeMap::new();
        for (name, value) in self.params.trainable() {
            let id = if trainable {
                tape.param(name.clone(), value.clone())
            } else {
                tape.constant(value.clone())
            };
            nodes.insert(name.clone(), id);
        }
        for (name, value) in self.params.buffers() {
            nodes.insert(name.clone(), tape.constant(value.clone()));
        }
        Bound { nodes }
    }

    /// Like [`Network::bind`] but reuses existing nodes for the trainable
    /// tensors; buffers become constants.
    pub fn bind_nodes(&self, tape: &mut Tape<T>, trainable: &BTreeMap<String, NodeId>) -> Bound {
        let mut nodes = trainable.clone();
        for (name, value) in self.params.buffers() {
            nodes.insert(name.clone(), tape.constant(value.clone()));
        }
        Bound { nodes }
    }

    /// Records the forward pass of `x` on `tape` using already bound parameters.
    pub fn forward_on(
        &self,
        tape: &mut Tape<T>,
        bound: &Bound,
        x: NodeId,
        mode: Mode,
    ) -> Result<ForwardPass<T>> {
        let cols = tape.value(x).cols();
        if cols != self.spec.input_width() {
            return Err(Error::Shape(format!(
                "network expects {} input columns, got {cols}",
                self.spec.input_width()
            )));
        }
        let n = self.spec.layers().len();
        let mut h = x;
        let mut hidden = Vec::with_capacity(n.saturating_sub(1));
        let mut bn_stats = Vec::new();
        let mut logits = x;
        for (i, layer) in self.spec.layers().iter().enumerate() {
            let w = bound.node(&format!("layer{i}.weight"));
            let b = bound.node(&format!("layer{i}.bias"));
            let mut z = tape.matmul(h, w);
            z = tape.add_row(z, b);
            if layer.batch_norm {
                z = batch_norm(tape, bound, i, z, mode, &mut bn_stats);
            }
            logits = z;
            h = activate(tape, z, layer.activation);
            if i + 1 < n {
                hidden.push(h);
            }
        }
        Ok(ForwardPass {
            output: h,
            logits,
            hidden,
            bn_stats,
        })
    }

    /// Folds minibatch statistics into the running buffers.
    pub fn apply_bn_stats(&mut self, stats: &[BatchNormStats<T>]) {
        let m = T::from_f64(BN_MOMENTUM);
        let one_minus = T::from_f64(1.0 - BN_MOMENTUM);
        for s in stats {
            for (suffix, batch) in [("running_mean", &s.mean), ("running_var", &s.var)] {
                let name = format!("layer{}.bn.{suffix}", s.layer);
                let buf = self
                    .params
                    .get_mut(&name)
                    .expect("buffer exists for batch-norm layer");
                *buf = buf.zip_map(batch, |r, b| m * r + one_minus * b);
            }
        }
    }

    /// Runs a batch through the network. In training mode batch norm uses
    /// minibatch statistics and the running buffers are updated.
    pub fn forward(&mut self, batch: &Tensor<T>, mode: Mode) -> Result<Tensor<T>> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape, false);
        let x = tape.input(batch.clone());
        let pass = self.forward_on(&mut tape, &bound, x, mode)?;
        tape.check_finite()?;
        if mode == Mode::Train {
            self.apply_bn_stats(&pass.bn_stats);
        }
        Ok(tape.value(pass.output).clone())
    }

    /// Inference-mode forward pass.
    pub fn infer(&self, batch: &Tensor<T>) -> Result<Tensor<T>> {
        Ok(self.infer_with_hidden(batch)?.0)
    }

    /// Inference-mode output together with the last hidden layer's activations.
    pub fn infer_with_hidden(&self, batch: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
        let mut tape = Tape::new();
        let bound = self.bind(&mut tape, false);
        let x = tape.input(batch.clone());
        let pass = self.forward_on(&mut tape, &bound, x, Mode::Infer)?;
        tape.check_finite()?;
        let last_hidden = pass.hidden.last().copied().unwrap_or(x);
        Ok((
            tape.value(pass.output).clone(),
            tape.value(last_hidden).clone(),
        ))
    }

    /// Inference in chunks of `chunk` rows.
    pub fn infer_chunked(&self, batch: &Tensor<T>, chunk: usize) -> Result<Tensor<T>> {
        let n = batch.rows();
        if n <= chunk {
            return self.infer(batch);
        }
        let mut parts = Vec::new();
        for start in (0..n).step_by(chunk.max(1)) {
            let idx: Vec<usize> = (start..(start + chunk).min(n)).collect();
            parts.push(self.infer(&batch.select_rows(&idx))?);
        }
        Tensor::vstack(&parts.iter().collect::<Vec<_>>())
    }
}

fn activate<T: Real>(tape: &mut Tape<T>, z: NodeId, act: Activation) -> NodeId {
    match act {
        Activation::Identity => z,
        Activation::Tanh => tape.tanh(z),
        Activation::Sigmoid => tape.sigmoid(z),
        Activation::LeakyRelu => tape.leaky_relu(z, LEAKY_SLOPE),
    }
}

fn batch_norm<T: Real>(
    tape: &mut Tape<T>,
    bound: &Bound,
    layer: usize,
    z: NodeId,
    mode: Mode,
    stats: &mut Vec<BatchNormStats<T>>,
) -> NodeId {
    let rows = tape.value(z).rows();
    let scale = bound.node(&format!("layer{layer}.bn.scale"));
    let shift = bound.node(&format!("layer{layer}.bn.shift"));
    let normalized = match mode {
        Mode::Train => {
            let sum = tape.sum_rows(z);
            let mean = tape.scale(sum, 1.0 / rows as f64);
            let mean_b = tape.broadcast_rows(mean, rows);
            let centered = tape.sub(z, mean_b);
            let sq = tape.square(centered);
            let sq_sum = tape.sum_rows(sq);
            let var = tape.scale(sq_sum, 1.0 / rows as f64);
            let var_eps = tape.add_scalar(var, BN_EPS);
            let inv_std = tape.powf(var_eps, -0.5);
            stats.push(BatchNormStats {
                layer,
                mean: tape.value(mean).clone(),
                var: tape.value(var).clone(),
            });
            tape.mul_row(centered, inv_std)
        }
        Mode::Infer => {
            let mean = bound.node(&format!("layer{layer}.bn.running_mean"));
            let var = tape
                .value(bound.node(&format!("layer{layer}.bn.running_var")))
                .clone();
            let eps = T::from_f64(BN_EPS);
            let inv_std = tape.constant(var.map(|v| (v + eps).sqrt().recip()));
            let mean_b = tape.broadcast_rows(mean, rows);
            let centered = tape.sub(z, mean_b);
            tape.mul_row(centered, inv_std)
        }
    };
    let scaled = tape.mul_row(normalized, scale);
    tape.add_row(scaled, shift)
}
