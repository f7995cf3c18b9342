use std::collections::BTreeMap;

use super::kernels::{
    broadcast_cols, broadcast_rows, leaky_slope, sigmoid, sign, sum_cols, sum_rows,
};
use super::{Gradient, NodeId, Op, Tape};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::Tensor;

fn fit<T: Real>(g: Tensor<T>, like: &Tensor<T>) -> Tensor<T> {
    if g.shape() == like.shape() {
        g
    } else {
        debug_assert_eq!(g.len(), like.len());
        Tensor::from_parts(like.shape().to_vec(), g.into_data())
    }
}

fn accumulate<T: Real>(slot: &mut Option<Tensor<T>>, g: Tensor<T>) {
    match slot {
        None => *slot = Some(g),
        Some(acc) => {
            for (a, b) in acc.data_mut().iter_mut().zip(g.data()) {
                *a += *b;
            }
        }
    }
}

impl<T: Real> Tape<T> {
    fn check_scalar(&self, output: NodeId) -> Result<()> {
        let v = self.value(output);
        if v.is_scalar() {
            Ok(())
        } else {
            Err(Error::NotScalar(v.shape().to_vec()))
        }
    }

    /// Numeric reverse pass. Returns the adjoint of every node reached from
    /// `output` (indexed by node id, `None` where nothing flowed).
    fn adjoints(&self, output: NodeId) -> Result<Vec<Option<Tensor<T>>>> {
        self.check_scalar(output)?;
        self.check_finite()?;
        let n = output.0 + 1;
        let mut grads: Vec<Option<Tensor<T>>> = vec![None; n];
        grads[output.0] = Some(Tensor::full(self.value(output).shape(), T::one()));

        for i in (0..n).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad || matches!(node.op, Op::Leaf(_)) {
                continue;
            }
            let Some(g) = grads[i].clone() else { continue };
            let needs = |k: usize| node.inputs[k].is_some_and(|id| self.nodes[id.0].requires_grad);
            let val = |k: usize| &self.nodes[node.inputs[k].expect("missing operand").0].value;
            let y = &node.value;

            let mut push = |k: usize, gk: Tensor<T>| {
                let id = node.inputs[k].expect("missing operand");
                let gk = fit(gk, &self.nodes[id.0].value);
                accumulate(&mut grads[id.0], gk);
            };

            match node.op {
                Op::Leaf(_) => unreachable!(),
                Op::MatMul { trans_a, trans_b } => {
                    let (a, b) = (val(0), val(1));
                    if needs(0) {
                        let ga = if trans_a {
                            b.matmul(&g, trans_b, true)
                        } else {
                            g.matmul(b, false, !trans_b)
                        };
                        push(0, ga);
                    }
                    if needs(1) {
                        let gb = if trans_b {
                            g.matmul(a, true, trans_a)
                        } else {
                            a.matmul(&g, !trans_a, false)
                        };
                        push(1, gb);
                    }
                }
                Op::Add => {
                    if needs(0) {
                        push(0, g.clone());
                    }
                    if needs(1) {
                        push(1, g);
                    }
                }
                Op::Sub => {
                    if needs(0) {
                        push(0, g.clone());
                    }
                    if needs(1) {
                        push(1, g.map(|v| -v));
                    }
                }
                Op::Mul => {
                    if needs(0) {
                        push(0, g.zip_map_flat(val(1), |a, b| a * b));
                    }
                    if needs(1) {
                        push(1, g.zip_map_flat(val(0), |a, b| a * b));
                    }
                }
                Op::Scale(s) => {
                    let s = T::from_f64(s);
                    push(0, g.map(|v| v * s));
                }
                Op::AddScalar(_) => push(0, g),
                Op::Powf(p) => {
                    let pt = T::from_f64(p);
                    let pm1 = T::from_f64(p - 1.0);
                    let ga = if p == 2.0 {
                        g.zip_map_flat(val(0), |gv, x| gv * (x + x))
                    } else {
                        g.zip_map_flat(val(0), |gv, x| gv * pt * x.powf(pm1))
                    };
                    push(0, ga);
                }
                Op::Tanh => push(0, g.zip_map_flat(y, |gv, t| gv * (T::one() - t * t))),
                Op::Sigmoid => push(0, g.zip_map_flat(y, |gv, s| gv * s * (T::one() - s))),
                Op::LeakyRelu(slope) => push(
                    0,
                    g.zip_map_flat(val(0), |gv, x| gv * leaky_slope(x, slope)),
                ),
                Op::Softplus => push(0, g.zip_map_flat(val(0), |gv, x| gv * sigmoid(x))),
                Op::Log => push(0, g.zip_map_flat(val(0), |gv, x| gv / x)),
                Op::Exp => push(0, g.zip_map_flat(y, |gv, e| gv * e)),
                Op::Abs => push(0, g.zip_map_flat(val(0), |gv, x| gv * sign(x))),
                Op::LeakyMask(_) | Op::Sign => {}
                Op::Sum => {
                    let a = val(0);
                    push(0, Tensor::full(&[a.rows(), a.cols()], g.item()));
                }
                Op::SumRows => push(0, broadcast_rows(&g, val(0).rows())),
                Op::SumCols => push(0, broadcast_cols(&g, val(0).cols())),
                Op::BroadcastScalar { .. } => push(0, Tensor::scalar(g.sum())),
                Op::BroadcastRows(_) => push(0, sum_rows(&g)),
                Op::BroadcastCols(_) => push(0, sum_cols(&g)),
                Op::Map { name, .. } => return Err(Error::NoDerivative(name)),
            }
        }
        if grads.iter().flatten().any(|g| !g.all_finite()) {
            return Err(Error::NonFinite("gradient accumulation".into()));
        }
        Ok(grads)
    }

    /// Gradient of the scalar `output` with respect to every parameter leaf.
    /// Parameters outside the output's ancestry get exact zeros.
    pub fn backward(&self, output: NodeId) -> Result<Gradient<T>> {
        let mut adj = self.adjoints(output)?;
        let mut map = BTreeMap::new();
        for (name, id) in &self.params {
            let g = adj
                .get_mut(id.0)
                .and_then(Option::take)
                .unwrap_or_else(|| Tensor::zeros(self.value(*id).shape()));
            map.insert(name.clone(), g);
        }
        Ok(Gradient::new(map))
    }

    /// Numeric gradient of the scalar `output` with respect to arbitrary
    /// (leaf or interior) nodes.
    pub fn grad_of(&self, output: NodeId, targets: &[NodeId]) -> Result<Vec<Tensor<T>>> {
        let mut adj = self.adjoints(output)?;
        Ok(targets
            .iter()
            .map(|id| {
                adj.get_mut(id.0)
                    .and_then(Option::take)
                    .unwrap_or_else(|| Tensor::zeros(self.value(*id).shape()))
            })
            .collect())
    }

    /// Appends the expression for `d output / d input` to the tape and
    /// returns its node. The result is itself differentiable with respect
    /// to the parameters, which is what a gradient penalty needs.
    pub fn input_gradient(&mut self, output: NodeId, input: NodeId) -> Result<NodeId> {
        self.check_scalar(output)?;
        self.check_finite()?;
        let n = output.0 + 1;
        if input.0 >= n {
            return Err(Error::invalid("input was recorded after the output"));
        }

        // Only nodes that depend on `input` carry a non-zero adjoint.
        let mut on_path = vec![false; n];
        on_path[input.0] = true;
        for i in input.0 + 1..n {
            let node = &self.nodes[i];
            on_path[i] = !node.op.is_piecewise_constant() && node.inputs().any(|id| on_path[id.0]);
        }
        if !on_path[output.0] {
            let zeros = Tensor::zeros(self.value(input).shape());
            return Ok(self.constant(zeros));
        }

        let mut adj: Vec<Option<NodeId>> = vec![None; n];
        let seed = Tensor::full(self.value(output).shape(), T::one());
        adj[output.0] = Some(self.constant(seed));

        for i in (input.0 + 1..n).rev() {
            if !on_path[i] {
                continue;
            }
            let Some(g) = adj[i].take() else { continue };
            let node = self.nodes[i].clone();
            let y = NodeId(i);
            let operand = |k: usize| node.inputs[k].expect("missing operand");
            let needs = |k: usize| node.inputs[k].is_some_and(|id| on_path[id.0]);

            let mut contributions: Vec<(NodeId, NodeId)> = Vec::with_capacity(2);
            match node.op {
                Op::Leaf(_) => continue,
                Op::MatMul { trans_a, trans_b } => {
                    let (a, b) = (operand(0), operand(1));
                    if needs(0) {
                        let ga = if trans_a {
                            self.matmul_t(b, g, trans_b, true)
                        } else {
                            self.matmul_t(g, b, false, !trans_b)
                        };
                        contributions.push((a, ga));
                    }
                    if needs(1) {
                        let gb = if trans_b {
                            self.matmul_t(g, a, true, trans_a)
                        } else {
                            self.matmul_t(a, g, !trans_a, false)
                        };
                        contributions.push((b, gb));
                    }
                }
                Op::Add => {
                    for k in 0..2 {
                        if needs(k) {
                            contributions.push((operand(k), g));
                        }
                    }
                }
                Op::Sub => {
                    if needs(0) {
                        contributions.push((operand(0), g));
                    }
                    if needs(1) {
                        let ng = self.neg(g);
                        contributions.push((operand(1), ng));
                    }
                }
                Op::Mul => {
                    if needs(0) {
                        let ga = self.mul(g, operand(1));
                        contributions.push((operand(0), ga));
                    }
                    if needs(1) {
                        let gb = self.mul(g, operand(0));
                        contributions.push((operand(1), gb));
                    }
                }
                Op::Scale(s) => {
                    let ga = self.scale(g, s);
                    contributions.push((operand(0), ga));
                }
                Op::AddScalar(_) => contributions.push((operand(0), g)),
                Op::Powf(p) => {
                    let x = operand(0);
                    let d = if p == 2.0 {
                        self.scale(x, 2.0)
                    } else {
                        let pw = self.powf(x, p - 1.0);
                        self.scale(pw, p)
                    };
                    let ga = self.mul(g, d);
                    contributions.push((x, ga));
                }
                Op::Tanh => {
                    let y2 = self.square(y);
                    let neg = self.neg(y2);
                    let d = self.add_scalar(neg, 1.0);
                    let ga = self.mul(g, d);
                    contributions.push((operand(0), ga));
                }
                Op::Sigmoid => {
                    let neg = self.neg(y);
                    let one_minus = self.add_scalar(neg, 1.0);
                    let d = self.mul(y, one_minus);
                    let ga = self.mul(g, d);
                    contributions.push((operand(0), ga));
                }
                Op::LeakyRelu(slope) => {
                    let mask = self.unary(Op::LeakyMask(slope), operand(0));
                    let ga = self.mul(g, mask);
                    contributions.push((operand(0), ga));
                }
                Op::Softplus => {
                    let d = self.sigmoid(operand(0));
                    let ga = self.mul(g, d);
                    contributions.push((operand(0), ga));
                }
                Op::Log => {
                    let inv = self.powf(operand(0), -1.0);
                    let ga = self.mul(g, inv);
                    contributions.push((operand(0), ga));
                }
                Op::Exp => {
                    let ga = self.mul(g, y);
                    contributions.push((operand(0), ga));
                }
                Op::Abs => {
                    let s = self.unary(Op::Sign, operand(0));
                    let ga = self.mul(g, s);
                    contributions.push((operand(0), ga));
                }
                Op::LeakyMask(_) | Op::Sign => {}
                Op::Sum => {
                    let a = self.value(operand(0));
                    let (r, c) = (a.rows(), a.cols());
                    let ga = self.broadcast_scalar(g, r, c);
                    contributions.push((operand(0), ga));
                }
                Op::SumRows => {
                    let r = self.value(operand(0)).rows();
                    let ga = self.broadcast_rows(g, r);
                    contributions.push((operand(0), ga));
                }
                Op::SumCols => {
                    let c = self.value(operand(0)).cols();
                    let ga = self.broadcast_cols(g, c);
                    contributions.push((operand(0), ga));
                }
                Op::BroadcastScalar { .. } => {
                    let ga = self.sum(g);
                    contributions.push((operand(0), ga));
                }
                Op::BroadcastRows(_) => {
                    let ga = self.sum_rows(g);
                    contributions.push((operand(0), ga));
                }
                Op::BroadcastCols(_) => {
                    let ga = self.sum_cols(g);
                    contributions.push((operand(0), ga));
                }
                Op::Map { name, .. } => return Err(Error::NoDerivative(name)),
            }

            for (target, contrib) in contributions {
                adj[target.0] = Some(match adj[target.0] {
                    None => contrib,
                    Some(prev) => self.add(prev, contrib),
                });
            }
        }

        let g = adj[input.0].expect("input is on its own path");
        self.check_finite()?;
        Ok(g)
    }
}
