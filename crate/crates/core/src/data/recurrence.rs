use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// `R[i][j] = |s_i - s_j|` for a scalar series, as a `T x T` tensor.
pub fn recurrence_series(series: &[f64]) -> Result<Tensor> {
    let t = series.len();
    if t == 0 {
        return Err(Error::Empty("recurrence of an empty series".into()));
    }
    let mut data = Vec::with_capacity(t * t);
    for &a in series {
        data.extend(series.iter().map(|&b| (a - b).abs()));
    }
    Tensor::matrix(t, t, data)
}

/// Per-channel distance plot of a `T x C` series, shaped `[T, T, C]`
/// (channel fastest). A single channel yields `[T, T]`.
pub fn recurrence_matrix(series: &Tensor) -> Result<Tensor> {
    let (t, c) = (series.rows(), series.cols());
    if c == 1 {
        return recurrence_series(series.data());
    }
    let mut data = Vec::with_capacity(t * t * c);
    for i in 0..t {
        let si = series.row(i);
        for j in 0..t {
            let sj = series.row(j);
            data.extend(si.iter().zip(sj).map(|(a, b)| (a - b).abs()));
        }
    }
    Tensor::new(vec![t, t, c], data)
}
