//! Reverse-mode automatic differentiation on a per-minibatch tape.
//!
//! A [`Tape`] records every primitive operation together with its output
//! value. Two reverse passes are available:
//!
//! * [`Tape::backward`] walks the tape once and returns numeric gradients of a
//!   scalar with respect to every parameter leaf.
//! * [`Tape::input_gradient`] builds the gradient with respect to an input
//!   leaf *as new tape nodes*. Anything computed from it (a gradient penalty,
//!   say) stays differentiable, so a later `backward` yields second-order
//!   parameter gradients.
//!
//! All differentiable operations act on rank-2 views of their operands.

mod backward;
mod check;
pub(crate) mod kernels;

use std::collections::BTreeMap;

pub use check::{finite_diff_check, finite_diff_gradient, max_relative_error};

use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub(crate) usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeafKind {
    /// Trainable value; `backward` reports its gradient.
    Param,
    /// Differentiable input; target of `input_gradient`.
    Input,
    /// Fixed value; never receives a gradient.
    Constant,
}

/// Primitive operations. Constants are carried as `f64` and converted to the
/// tape's element type on evaluation.
#[derive(Debug, Clone, Copy)]
pub enum Op {
    Leaf(LeafKind),
    MatMul {
        trans_a: bool,
        trans_b: bool,
    },
    Add,
    Sub,
    Mul,
    Scale(f64),
    AddScalar(f64),
    Powf(f64),
    Tanh,
    Sigmoid,
    /// Leaky rectifier with the given negative slope.
    LeakyRelu(f64),
    /// Local slope of the leaky rectifier (1 for x >= 0). Piecewise constant.
    LeakyMask(f64),
    Softplus,
    Log,
    Exp,
    Abs,
    /// +1 for x >= 0, -1 otherwise. Piecewise constant.
    Sign,
    Sum,
    SumRows,
    SumCols,
    BroadcastScalar {
        rows: usize,
        cols: usize,
    },
    BroadcastRows(usize),
    BroadcastCols(usize),
    /// Opaque elementwise function: evaluable, not differentiable.
    Map {
        name: &'static str,
        f: fn(f64) -> f64,
    },
}

impl Op {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Leaf(_) => "leaf",
            Op::MatMul { .. } => "matmul",
            Op::Add => "add",
            Op::Sub => "sub",
            Op::Mul => "mul",
            Op::Scale(_) => "scale",
            Op::AddScalar(_) => "add_scalar",
            Op::Powf(_) => "powf",
            Op::Tanh => "tanh",
            Op::Sigmoid => "sigmoid",
            Op::LeakyRelu(_) => "leaky_relu",
            Op::LeakyMask(_) => "leaky_mask",
            Op::Softplus => "softplus",
            Op::Log => "log",
            Op::Exp => "exp",
            Op::Abs => "abs",
            Op::Sign => "sign",
            Op::Sum => "sum",
            Op::SumRows => "sum_rows",
            Op::SumCols => "sum_cols",
            Op::BroadcastScalar { .. } => "broadcast_scalar",
            Op::BroadcastRows(_) => "broadcast_rows",
            Op::BroadcastCols(_) => "broadcast_cols",
            Op::Map { name, .. } => name,
        }
    }

    /// Operations whose derivative is zero almost everywhere.
    fn is_piecewise_constant(&self) -> bool {
        matches!(self, Op::LeakyMask(_) | Op::Sign)
    }
}

#[derive(Debug, Clone)]
struct Node<T: Real> {
    op: Op,
    inputs: [Option<NodeId>; 2],
    value: Tensor<T>,
    requires_grad: bool,
}

impl<T: Real> Node<T> {
    fn inputs(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.inputs.iter().flatten().copied()
    }
}

/// Gradients keyed by parameter name; shapes equal the parameters' shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradient<T: Real = f64> {
    grads: BTreeMap<String, Tensor<T>>,
}

impl<T: Real> Gradient<T> {
    pub fn new(grads: BTreeMap<String, Tensor<T>>) -> Self {
        Self { grads }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.grads.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<T>> {
        self.grads.get_mut(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Tensor<T>)> {
        self.grads.iter()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.grads.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.grads.values().all(Tensor::all_finite)
    }
}

/// Computation record for one minibatch.
#[derive(Debug, Clone)]
pub struct Tape<T: Real = f64> {
    nodes: Vec<Node<T>>,
    params: Vec<(String, NodeId)>,
    poisoned: Option<(NodeId, &'static str)>,
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Self {
            nodes: Vec::new(),
            params: Vec::new(),
            poisoned: None,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor<T> {
        &self.nodes[id.0].value
    }

    pub fn op(&self, id: NodeId) -> Op {
        self.nodes[id.0].op
    }

    /// Parameter leaves in registration order.
    pub fn params(&self) -> &[(String, NodeId)] {
        &self.params
    }

    /// Fails if any recorded value is NaN or infinite.
    pub fn check_finite(&self) -> Result<()> {
        match self.poisoned {
            None => Ok(()),
            Some((id, op)) => Err(Error::NonFinite(format!(
                "output of `{op}` at node {}",
                id.0
            ))),
        }
    }

    fn leaf(&mut self, kind: LeafKind, value: Tensor<T>) -> NodeId {
        let id = NodeId(self.nodes.len());
        if self.poisoned.is_none() && !value.all_finite() {
            self.poisoned = Some((id, "leaf"));
        }
        self.nodes.push(Node {
            op: Op::Leaf(kind),
            inputs: [None, None],
            value,
            requires_grad: kind != LeafKind::Constant,
        });
        id
    }

    /// Registers a named trainable leaf. Names must be unique per tape.
    pub fn param(&mut self, name: impl Into<String>, value: Tensor<T>) -> NodeId {
        let name = name.into();
        assert!(
            self.params.iter().all(|(n, _)| *n != name),
            "parameter `{name}` registered twice"
        );
        let id = self.leaf(LeafKind::Param, value);
        self.params.push((name, id));
        id
    }

    pub fn input(&mut self, value: Tensor<T>) -> NodeId {
        self.leaf(LeafKind::Input, value)
    }

    pub fn constant(&mut self, value: Tensor<T>) -> NodeId {
        self.leaf(LeafKind::Constant, value)
    }

    fn push(&mut self, op: Op, inputs: [Option<NodeId>; 2]) -> NodeId {
        let value = {
            let vals: Vec<&Tensor<T>> = inputs
                .iter()
                .flatten()
                .map(|i| &self.nodes[i.0].value)
                .collect();
            kernels::eval(&op, &vals)
        };
        let requires_grad = !op.is_piecewise_constant()
            && inputs
                .iter()
                .flatten()
                .any(|i| self.nodes[i.0].requires_grad);
        let id = NodeId(self.nodes.len());
        if self.poisoned.is_none() && !value.all_finite() {
            self.poisoned = Some((id, op.name()));
        }
        self.nodes.push(Node {
            op,
            inputs,
            value,
            requires_grad,
        });
        id
    }

    fn unary(&mut self, op: Op, x: NodeId) -> NodeId {
        self.push(op, [Some(x), None])
    }

    fn binary(&mut self, op: Op, a: NodeId, b: NodeId) -> NodeId {
        self.push(op, [Some(a), Some(b)])
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.matmul_t(a, b, false, false)
    }

    /// `op(a) * op(b)` where `op` optionally transposes.
    pub fn matmul_t(&mut self, a: NodeId, b: NodeId, trans_a: bool, trans_b: bool) -> NodeId {
        self.binary(Op::MatMul { trans_a, trans_b }, a, b)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(Op::Add, a, b)
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(Op::Sub, a, b)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.binary(Op::Mul, a, b)
    }

    pub fn scale(&mut self, x: NodeId, s: f64) -> NodeId {
        self.unary(Op::Scale(s), x)
    }

    pub fn neg(&mut self, x: NodeId) -> NodeId {
        self.scale(x, -1.0)
    }

    pub fn add_scalar(&mut self, x: NodeId, s: f64) -> NodeId {
        self.unary(Op::AddScalar(s), x)
    }

    pub fn powf(&mut self, x: NodeId, p: f64) -> NodeId {
        self.unary(Op::Powf(p), x)
    }

    pub fn square(&mut self, x: NodeId) -> NodeId {
        self.powf(x, 2.0)
    }

    pub fn sqrt(&mut self, x: NodeId) -> NodeId {
        self.powf(x, 0.5)
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        self.unary(Op::Tanh, x)
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        self.unary(Op::Sigmoid, x)
    }

    pub fn leaky_relu(&mut self, x: NodeId, slope: f64) -> NodeId {
        self.unary(Op::LeakyRelu(slope), x)
    }

    pub fn softplus(&mut self, x: NodeId) -> NodeId {
        self.unary(Op::Softplus, x)
    }

    pub fn log(&mut self, x: NodeId) -> NodeId {
        self.unary(Op::Log, x)
    }

    pub fn exp(&mut self, x: NodeId) -> NodeId {
        self.unary(Op::Exp, x)
    }

    pub fn abs(&mut self, x: NodeId) -> NodeId {
        self.unary(Op::Abs, x)
    }

    /// Elementwise function without a derivative. Reverse passes that reach
    /// it fail with [`Error::NoDerivative`].
    pub fn map(&mut self, x: NodeId, name: &'static str, f: fn(f64) -> f64) -> NodeId {
        self.unary(Op::Map { name, f }, x)
    }

    /// Sum of all entries, as a 1x1 tensor.
    pub fn sum(&mut self, x: NodeId) -> NodeId {
        self.unary(Op::Sum, x)
    }

    pub fn mean(&mut self, x: NodeId) -> NodeId {
        let n = self.value(x).len() as f64;
        let s = self.sum(x);
        self.scale(s, 1.0 / n)
    }

    /// Column-wise sums: `[n, m] -> [1, m]`.
    pub fn sum_rows(&mut self, x: NodeId) -> NodeId {
        self.unary(Op::SumRows, x)
    }

    /// Row-wise sums: `[n, m] -> [n, 1]`.
    pub fn sum_cols(&mut self, x: NodeId) -> NodeId {
        self.unary(Op::SumCols, x)
    }

    pub fn broadcast_scalar(&mut self, x: NodeId, rows: usize, cols: usize) -> NodeId {
        self.unary(Op::BroadcastScalar { rows, cols }, x)
    }

    /// Repeats a single row `rows` times.
    pub fn broadcast_rows(&mut self, x: NodeId, rows: usize) -> NodeId {
        self.unary(Op::BroadcastRows(rows), x)
    }

    /// Repeats a single column `cols` times.
    pub fn broadcast_cols(&mut self, x: NodeId, cols: usize) -> NodeId {
        self.unary(Op::BroadcastCols(cols), x)
    }

    /// `x + b` with the row vector `b` added to every row of `x`.
    pub fn add_row(&mut self, x: NodeId, b: NodeId) -> NodeId {
        let rows = self.value(x).rows();
        let bb = self.broadcast_rows(b, rows);
        self.add(x, bb)
    }

    /// `x * s` with the row vector `s` multiplied into every row of `x`.
    pub fn mul_row(&mut self, x: NodeId, s: NodeId) -> NodeId {
        let rows = self.value(x).rows();
        let sb = self.broadcast_rows(s, rows);
        self.mul(x, sb)
    }

    /// `x * s` with the column vector `s` scaling each row of `x`.
    pub fn mul_col(&mut self, x: NodeId, s: NodeId) -> NodeId {
        let cols = self.value(x).cols();
        let sb = self.broadcast_cols(s, cols);
        self.mul(x, sb)
    }

    /// Replays every recorded operation from its recorded inputs and checks
    /// that the outputs match bit for bit.
    pub fn replay(&self) -> Result<()> {
        for (i, node) in self.nodes.iter().enumerate() {
            if matches!(node.op, Op::Leaf(_)) {
                continue;
            }
            if node.inputs().any(|inp| inp.0 >= i) {
                return Err(Error::invalid(format!(
                    "node {i} is not topologically ordered"
                )));
            }
            let vals: Vec<&Tensor<T>> = node.inputs().map(|inp| &self.nodes[inp.0].value).collect();
            let again = kernels::eval(&node.op, &vals);
            let same = again.shape() == node.value.shape()
                && again
                    .data()
                    .iter()
                    .zip(node.value.data())
                    .all(|(a, b)| a.as_f64().to_bits() == b.as_f64().to_bits());
            if !same {
                return Err(Error::invalid(format!(
                    "replay of node {i} (`{}`) diverged",
                    node.op.name()
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests;
