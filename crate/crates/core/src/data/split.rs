use super::{LabeledDataset, Split};
use crate::error::{Error, Result};
use crate::rng::{permutation, sub_stream, Stream};
use crate::tensor::Tensor;

/// Share of normal samples used for training.
pub const TRAIN_FRACTION: f64 = 0.8;

/// Leave-one-class-out: train on 80% of the normal classes, test on the
/// other 20% plus every sample of `abnormal` (labelled 1).
pub fn class_anomaly_split(
    samples: &Tensor,
    classes: &[usize],
    abnormal: usize,
    seed: u64,
    provenance: &str,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if samples.rows() != classes.len() {
        return Err(Error::Shape(format!(
            "{} samples but {} classes",
            samples.rows(),
            classes.len()
        )));
    }
    let (train_rows, test_rows) = split_rows(classes, abnormal, seed)?;

    let pick = |rows: &[usize], split| -> Result<LabeledDataset> {
        let labels = rows
            .iter()
            .map(|&r| u8::from(classes[r] == abnormal))
            .collect();
        LabeledDataset::new(samples.select_rows(rows), labels, split, provenance)?
            .with_classes(rows.iter().map(|&r| classes[r]).collect())
    };
    Ok((
        pick(&train_rows, Split::Train)?,
        pick(&test_rows, Split::Test)?,
    ))
}

/// Row indices of the train and test sides of a leave-one-class-out split.
pub(crate) fn split_rows(
    classes: &[usize],
    abnormal: usize,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let normal: Vec<usize> = (0..classes.len())
        .filter(|&i| classes[i] != abnormal)
        .collect();
    let anomalous: Vec<usize> = (0..classes.len())
        .filter(|&i| classes[i] == abnormal)
        .collect();
    if normal.len() < 2 {
        return Err(Error::Empty("fewer than two normal samples".into()));
    }
    let mut rng = sub_stream(seed, Stream::Data, 0x5017);
    let order = permutation(&mut rng, normal.len());
    let n_train = (TRAIN_FRACTION * normal.len() as f64).floor() as usize;
    let train_rows = order[..n_train].iter().map(|&k| normal[k]).collect();
    let mut test_rows: Vec<usize> = order[n_train..].iter().map(|&k| normal[k]).collect();
    test_rows.extend(&anomalous);
    Ok((train_rows, test_rows))
}

/// MNIST protocol with `digit` as the anomaly.
pub fn leave_one_digit_out_split(
    images: &Tensor,
    labels: &[u8],
    digit: u8,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if digit > 9 {
        return Err(Error::invalid(format!("digit {digit} outside 0-9")));
    }
    let classes: Vec<usize> = labels.iter().map(|&l| l as usize).collect();
    class_anomaly_split(
        images,
        &classes,
        digit as usize,
        seed,
        &format!("mnist, digit {digit} abnormal"),
    )
}

/// Block-averages square images stored one per row.
pub fn downsample_images(images: &Tensor, factor: usize) -> Result<Tensor> {
    let d = images.cols();
    let side = (d as f64).sqrt().round() as usize;
    if side * side != d {
        return Err(Error::Shape(format!(
            "rows of width {d} are not square images"
        )));
    }
    if factor == 0 || side % factor != 0 {
        return Err(Error::invalid(format!(
            "factor {factor} does not divide side {side}"
        )));
    }
    if factor == 1 {
        return Ok(images.clone());
    }
    let small = side / factor;
    let area = (factor * factor) as f64;
    let mut out = Vec::with_capacity(images.rows() * small * small);
    for r in 0..images.rows() {
        let img = images.row(r);
        for by in 0..small {
            for bx in 0..small {
                let mut s = 0.0;
                for y in by * factor..(by + 1) * factor {
                    s += img[y * side + bx * factor..y * side + (bx + 1) * factor]
                        .iter()
                        .sum::<f64>();
                }
                out.push(s / area);
            }
        }
    }
    Tensor::matrix(images.rows(), small * small, out)
}
