//! Central finite differences as an independent check on reverse mode.

use std::collections::BTreeMap;

use super::{Gradient, NodeId, Tape};
use crate::error::{Error, Result};
use crate::real::Real;
use crate::tensor::Tensor;

/// Builds a scalar on a fresh tape from the named parameter nodes.
pub trait ScalarFn<T: Real>: Fn(&mut Tape<T>, &BTreeMap<String, NodeId>) -> Result<NodeId> {}
impl<T: Real, F> ScalarFn<T> for F where
    F: Fn(&mut Tape<T>, &BTreeMap<String, NodeId>) -> Result<NodeId>
{
}

fn record<T: Real>(
    f: &impl ScalarFn<T>,
    params: &BTreeMap<String, Tensor<T>>,
) -> Result<(Tape<T>, NodeId)> {
    let mut tape = Tape::new();
    let ids = params
        .iter()
        .map(|(name, value)| (name.clone(), tape.param(name.clone(), value.clone())))
        .collect();
    let out = f(&mut tape, &ids)?;
    tape.check_finite()?;
    Ok((tape, out))
}

fn evaluate<T: Real>(f: &impl ScalarFn<T>, params: &BTreeMap<String, Tensor<T>>) -> Result<f64> {
    let (tape, out) = record(f, params)?;
    let v = tape.value(out);
    if !v.is_scalar() {
        return Err(Error::NotScalar(v.shape().to_vec()));
    }
    Ok(v.item().as_f64())
}

/// Central-difference estimate of the gradient of `f` at `params`.
pub fn finite_diff_gradient<T: Real>(
    f: impl ScalarFn<T>,
    params: &BTreeMap<String, Tensor<T>>,
    step: f64,
) -> Result<Gradient<T>> {
    if step <= 0.0 {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let mut point = params.clone();
    let mut out = BTreeMap::new();
    for (name, value) in params {
        let mut g = Vec::with_capacity(value.len());
        for k in 0..value.len() {
            let orig = value.data()[k];
            let at = |point: &mut BTreeMap<String, Tensor<T>>, x: f64| -> Result<f64> {
                point.get_mut(name).expect("present").data_mut()[k] = T::from_f64(x);
                evaluate(&f, point).map_err(|e| match e {
                    Error::NonFinite(_) => {
                        Error::NonFinite(format!("{name}[{k}] perturbed by {x:e}"))
                    }
                    other => other,
                })
            };
            let plus = at(&mut point, orig.as_f64() + step)?;
            let minus = at(&mut point, orig.as_f64() - step)?;
            point.get_mut(name).expect("present").data_mut()[k] = orig;
            g.push(T::from_f64((plus - minus) / (2.0 * step)));
        }
        out.insert(name.clone(), Tensor::from_parts(value.shape().to_vec(), g));
    }
    Ok(Gradient::new(out))
}

/// Worst elementwise relative error between two gradients, using the
/// denominator `max(|a|, |b|, 1e-8)`.
pub fn max_relative_error<T: Real>(a: &Gradient<T>, b: &Gradient<T>) -> f64 {
    let mut worst = 0.0_f64;
    for (name, ga) in a.iter() {
        let gb = b
            .get(name)
            .unwrap_or_else(|| panic!("gradient `{name}` missing on one side"));
        assert_eq!(ga.shape(), gb.shape(), "gradient `{name}` shape differs");
        for (x, y) in ga.data().iter().zip(gb.data()) {
            let (x, y) = (x.as_f64(), y.as_f64());
            let denom = x.abs().max(y.abs()).max(1e-8);
            worst = worst.max((x - y).abs() / denom);
        }
    }
    worst
}

/// Compares reverse-mode gradients of `f` against central differences and
/// returns the worst relative error.
pub fn finite_diff_check<T: Real>(
    f: impl ScalarFn<T>,
    params: &BTreeMap<String, Tensor<T>>,
    step: f64,
) -> Result<f64> {
    let (tape, out) = record(&f, params)?;
    let analytic = tape.backward(out)?;
    let numeric = finite_diff_gradient(f, params, step)?;
    Ok(max_relative_error(&analytic, &numeric))
}
