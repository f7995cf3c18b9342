//! Forward kernels for every tape operation. Shared by op recording and by
//! [`Tape::replay`](super::Tape::replay), so both paths compute identical bits.

use super::Op;
use crate::real::Real;
use crate::tensor::Tensor;

fn c<T: Real>(x: f64) -> T {
    T::from_f64(x)
}

pub(crate) fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

pub(crate) fn softplus<T: Real>(x: T) -> T {
    // log(1 + e^x) without overflow
    x.max(T::zero()) + (-x.abs()).exp().ln_1p()
}

pub(crate) fn leaky_slope<T: Real>(x: T, slope: f64) -> T {
    if x >= T::zero() {
        T::one()
    } else {
        c(slope)
    }
}

pub(crate) fn sign<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one()
    } else {
        -T::one()
    }
}

fn same_shape<T: Real>(op: &Op, a: &Tensor<T>, b: &Tensor<T>) {
    assert!(
        a.rows() == b.rows() && a.cols() == b.cols(),
        "{}: operand shapes differ: {:?} vs {:?}",
        op.name(),
        a.shape(),
        b.shape()
    );
}

fn as_matrix<T: Real>(t: Tensor<T>) -> Tensor<T> {
    let (r, c) = (t.rows(), t.cols());
    Tensor::from_parts(vec![r, c], t.into_data())
}

pub(crate) fn sum_rows<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    let (r, cols) = (x.rows(), x.cols());
    let mut out = vec![T::zero(); cols];
    for i in 0..r {
        for (o, v) in out.iter_mut().zip(x.row(i)) {
            *o += *v;
        }
    }
    Tensor::from_parts(vec![1, cols], out)
}

pub(crate) fn sum_cols<T: Real>(x: &Tensor<T>) -> Tensor<T> {
    let r = x.rows();
    let out = (0..r).map(|i| x.row(i).iter().copied().sum()).collect();
    Tensor::from_parts(vec![r, 1], out)
}

pub(crate) fn broadcast_rows<T: Real>(x: &Tensor<T>, rows: usize) -> Tensor<T> {
    assert_eq!(
        x.rows(),
        1,
        "broadcast_rows expects a single row, got {:?}",
        x.shape()
    );
    let cols = x.cols();
    let mut out = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        out.extend_from_slice(x.data());
    }
    Tensor::from_parts(vec![rows, cols], out)
}

pub(crate) fn broadcast_cols<T: Real>(x: &Tensor<T>, cols: usize) -> Tensor<T> {
    assert_eq!(
        x.cols(),
        1,
        "broadcast_cols expects a single column, got {:?}",
        x.shape()
    );
    let rows = x.rows();
    let mut out = Vec::with_capacity(rows * cols);
    for &v in x.data() {
        out.extend(std::iter::repeat_n(v, cols));
    }
    Tensor::from_parts(vec![rows, cols], out)
}

/// Evaluates `op` on its input values.
pub(crate) fn eval<T: Real>(op: &Op, inputs: &[&Tensor<T>]) -> Tensor<T> {
    let un = |f: &dyn Fn(T) -> T| as_matrix(inputs[0].map(f));
    match *op {
        Op::Leaf(_) => unreachable!("leaves are not evaluated"),
        Op::MatMul { trans_a, trans_b } => inputs[0].matmul(inputs[1], trans_a, trans_b),
        Op::Add => {
            same_shape(op, inputs[0], inputs[1]);
            as_matrix(inputs[0].zip_map_flat(inputs[1], |a, b| a + b))
        }
        Op::Sub => {
            same_shape(op, inputs[0], inputs[1]);
            as_matrix(inputs[0].zip_map_flat(inputs[1], |a, b| a - b))
        }
        Op::Mul => {
            same_shape(op, inputs[0], inputs[1]);
            as_matrix(inputs[0].zip_map_flat(inputs[1], |a, b| a * b))
        }
        Op::Scale(s) => {
            let s = c::<T>(s);
            un(&|x| x * s)
        }
        Op::AddScalar(s) => {
            let s = c::<T>(s);
            un(&|x| x + s)
        }
        Op::Powf(p) => {
            let pt = c::<T>(p);
            if p == 2.0 {
                un(&|x| x * x)
            } else {
                un(&|x| x.powf(pt))
            }
        }
        Op::Tanh => un(&|x| x.tanh()),
        Op::Sigmoid => un(&sigmoid),
        Op::LeakyRelu(s) => {
            let st = c::<T>(s);
            un(&|x| if x >= T::zero() { x } else { x * st })
        }
        Op::LeakyMask(s) => un(&|x| leaky_slope(x, s)),
        Op::Softplus => un(&softplus),
        Op::Log => un(&|x| x.ln()),
        Op::Exp => un(&|x| x.exp()),
        Op::Abs => un(&|x| x.abs()),
        Op::Sign => un(&sign),
        Op::Sum => Tensor::scalar(inputs[0].sum()),
        Op::SumRows => sum_rows(inputs[0]),
        Op::SumCols => sum_cols(inputs[0]),
        Op::BroadcastScalar { rows, cols } => {
            assert!(inputs[0].is_scalar(), "broadcast_scalar expects a scalar");
            Tensor::full(&[rows, cols], inputs[0].item())
        }
        Op::BroadcastRows(rows) => broadcast_rows(inputs[0], rows),
        Op::BroadcastCols(cols) => broadcast_cols(inputs[0], cols),
        Op::Map { f, .. } => un(&|x| T::from_f64(f(x.as_f64()))),
    }
}

impl<T: Real> Tensor<T> {
    /// Elementwise combination that only requires equal element counts.
    pub(crate) fn zip_map_flat(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        debug_assert_eq!(self.len(), other.len());
        Tensor::from_parts(
            self.shape().to_vec(),
            self.data()
                .iter()
                .zip(other.data())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }
}
