use std::path::Path;

use super::{LabeledDataset, Split};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) if io.kind() == std::io::ErrorKind::NotFound => {
            Error::MissingData(path.to_path_buf())
        }
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::format("CSV file", format!("{}: {other:?}", path.display())),
    }
}

/// Writes a numeric matrix under a one-line header.
pub fn write_matrix_csv(path: &Path, header: &[String], values: &Tensor) -> Result<()> {
    if header.len() != values.cols() {
        return Err(Error::Shape(format!(
            "{} header names for {} columns",
            header.len(),
            values.cols()
        )));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| csv_err(path, e);
    w.write_record(header).map_err(io)?;
    for r in 0..values.rows() {
        w.write_record(values.row(r).iter().map(|v| v.to_string()))
            .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    crate::fsutil::write_atomic(path, &bytes)
}

/// Reads a numeric CSV with a header line.
pub fn read_matrix_csv(path: &Path) -> Result<(Vec<String>, Tensor)> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut data = Vec::new();
    let mut rows = 0;
    for rec in r.records() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        for field in rec.iter() {
            let v: f64 = field.trim().parse().map_err(|_| {
                Error::format(
                    "CSV file",
                    format!("{}: bad number `{field}`", path.display()),
                )
            })?;
            data.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::Empty(format!("{} has no rows", path.display())));
    }
    Ok((header.clone(), Tensor::matrix(rows, header.len(), data)?))
}

/// Columns `f0..f{d-1}`, then `label`.
pub fn write_dataset_csv(path: &Path, data: &LabeledDataset) -> Result<()> {
    let d = data.width();
    let mut header: Vec<String> = (0..d).map(|i| format!("f{i}")).collect();
    header.push("label".into());
    let mut rows = Vec::with_capacity(data.len() * (d + 1));
    for i in 0..data.len() {
        rows.extend_from_slice(data.samples.row(i));
        rows.push(f64::from(data.labels[i]));
    }
    write_matrix_csv(path, &header, &Tensor::matrix(data.len(), d + 1, rows)?)
}

/// Reads a CSV written by [`write_dataset_csv`]. A file without a `label`
/// column is read as all-normal.
pub fn read_dataset_csv(path: &Path, split: Split) -> Result<LabeledDataset> {
    let (header, m) = read_matrix_csv(path)?;
    let label_col = header.iter().position(|h| h == "label");
    let feature_cols: Vec<usize> = (0..header.len())
        .filter(|&c| Some(c) != label_col)
        .collect();
    if feature_cols.is_empty() {
        return Err(Error::format(
            "CSV file",
            format!("{}: no feature columns", path.display()),
        ));
    }
    let mut feats = Vec::with_capacity(m.rows() * feature_cols.len());
    let mut labels = Vec::with_capacity(m.rows());
    for r in 0..m.rows() {
        feats.extend(feature_cols.iter().map(|&c| m.get(r, c)));
        labels.push(match label_col.map(|c| m.get(r, c)) {
            None => 0,
            Some(v) if v == 0.0 => 0,
            Some(v) if v == 1.0 => 1,
            Some(v) => {
                return Err(Error::format(
                    "CSV file",
                    format!("{}: label {v} not 0/1", path.display()),
                ))
            }
        });
    }
    LabeledDataset::new(
        Tensor::matrix(m.rows(), feature_cols.len(), feats)?,
        labels,
        split,
        path.display().to_string(),
    )
}
