use std::collections::BTreeMap;

use rand::Rng;

use super::NetworkSpec;
use crate::error::{Error, Result};
use crate::real::Real;
use crate::rng::{sub_stream, Stream};
use crate::tensor::Tensor;

/// Named tensors of one network: trainable weights plus non-trainable
/// buffers (batch-norm running statistics).
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore<T: Real = f64> {
    trainable: BTreeMap<String, Tensor<T>>,
    buffers: BTreeMap<String, Tensor<T>>,
}

impl<T: Real> Default for ParamStore<T> {
    fn default() -> Self {
        Self {
            trainable: BTreeMap::new(),
            buffers: BTreeMap::new(),
        }
    }
}

fn is_buffer_name(name: &str) -> bool {
    name.contains(".running_")
}

impl<T: Real> ParamStore<T> {
    /// Glorot-uniform weights, zero biases, unit batch-norm scale and zero
    /// shift, running mean 0 and variance 1. Deterministic in `seed`.
    pub fn init(spec: &NetworkSpec, seed: u64) -> Self {
        Self::init_indexed(spec, seed, 0)
    }

    /// As [`ParamStore::init`] on init sub-stream `index`, so several
    /// networks built from one seed get independent weights.
    pub fn init_indexed(spec: &NetworkSpec, seed: u64, index: u64) -> Self {
        let mut rng = sub_stream(seed, Stream::Init, index);
        let mut store = Self::default();
        for (name, shape, _) in spec.param_layout() {
            let value = if name.ends_with(".weight") {
                let (fan_in, fan_out) = (shape[0], shape[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                let data = (0..fan_in * fan_out)
                    .map(|_| T::from_f64(rng.random_range(-limit..limit)))
                    .collect();
                Tensor::from_parts(shape, data)
            } else if name.ends_with(".bn.scale") || name.ends_with(".running_var") {
                Tensor::full(&shape, T::one())
            } else {
                Tensor::zeros(&shape)
            };
            store.insert(name, value);
        }
        store
    }

    /// Inserts a tensor; names containing `.running_` are buffers.
    pub fn insert(&mut self, name: String, value: Tensor<T>) {
        if is_buffer_name(&name) {
            self.buffers.insert(name, value);
        } else {
            self.trainable.insert(name, value);
        }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.trainable.get(name).or_else(|| self.buffers.get(name))
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<T>> {
        match self.trainable.get_mut(name) {
            Some(t) => Some(t),
            None => self.buffers.get_mut(name),
        }
    }

    pub fn trainable(&self) -> &BTreeMap<String, Tensor<T>> {
        &self.trainable
    }

    pub(crate) fn trainable_mut(&mut self) -> &mut BTreeMap<String, Tensor<T>> {
        &mut self.trainable
    }

    pub fn buffers(&self) -> &BTreeMap<String, Tensor<T>> {
        &self.buffers
    }

    /// Every tensor, trainable and buffer, in name order.
    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor<T>)> {
        let mut all: Vec<_> = self.trainable.iter().chain(self.buffers.iter()).collect();
        all.sort_by(|a, b| a.0.cmp(b.0));
        all.into_iter()
    }

    pub fn len(&self) -> usize {
        self.trainable.len() + self.buffers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_trainable_values(&self) -> usize {
        self.trainable.values().map(Tensor::len).sum()
    }

    pub fn cast<U: Real>(&self) -> ParamStore<U> {
        ParamStore {
            trainable: self
                .trainable
                .iter()
                .map(|(k, v)| (k.clone(), v.cast()))
                .collect(),
            buffers: self
                .buffers
                .iter()
                .map(|(k, v)| (k.clone(), v.cast()))
                .collect(),
        }
    }

    /// Checks that names and shapes agree with `spec`.
    pub fn validate(&self, spec: &NetworkSpec) -> Result<()> {
        let layout = spec.param_layout();
        if layout.len() != self.len() {
            return Err(Error::Shape(format!(
                "parameter store holds {} tensors, architecture needs {}",
                self.len(),
                layout.len()
            )));
        }
        for (name, shape, _) in layout {
            match self.get(&name) {
                None => return Err(Error::Shape(format!("missing parameter `{name}`"))),
                Some(t) if t.shape() != shape.as_slice() => {
                    return Err(Error::Shape(format!(
                        "parameter `{name}` has shape {:?}, architecture needs {shape:?}",
                        t.shape()
                    )))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    /// The CRC32 a checkpoint of this store would carry.
    pub fn checksum(&self) -> u32 {
        let bytes = super::encode_checkpoint(self);
        u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().expect("4 bytes"))
    }
}
