//! Datasets: the toy Gaussian ring, MNIST IDX files, UCI-HAR windows and
//! the leave-one-class-out protocol shared by the latter two.

mod har;
mod idx;
mod recurrence;
mod split;
mod table;
mod toy;

pub use har::{
    har_anomaly_split, load_har, load_har_root, synthetic_har, write_har_dir, Activity,
    ChannelStandardizer, HarFeatures, TimeSeriesWindow, HAR_CHANNELS, HAR_STEPS, TOTAL_ACC,
};
pub use idx::{
    load_idx, load_idx_images, load_idx_labels, load_mnist_dir, write_idx_images, write_idx_labels,
    IdxData,
};
pub use recurrence::{recurrence_matrix, recurrence_series};
pub use split::{
    class_anomaly_split, downsample_images, leave_one_digit_out_split, TRAIN_FRACTION,
};
pub use table::{read_dataset_csv, read_matrix_csv, write_dataset_csv, write_matrix_csv};
pub use toy::{
    sample_gaussian_mixture, toy_anomaly_label, GaussianMixtureSpec, ToyLabeler, THRESHOLD_DRAWS,
    THRESHOLD_MASS,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// Samples with binary anomaly labels (1 = anomalous).
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    pub samples: Tensor,
    pub labels: Vec<u8>,
    /// Original class of each sample, when the data has classes.
    pub classes: Option<Vec<usize>>,
    pub split: Split,
    pub provenance: String,
}

impl LabeledDataset {
    pub fn new(
        samples: Tensor,
        labels: Vec<u8>,
        split: Split,
        provenance: impl Into<String>,
    ) -> Result<Self> {
        if samples.rows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} samples but {} labels",
                samples.rows(),
                labels.len()
            )));
        }
        if labels.iter().any(|&l| l > 1) {
            return Err(Error::invalid("labels must be 0 or 1"));
        }
        if split == Split::Train && labels.contains(&1) {
            return Err(Error::invalid("train split may not contain anomalies"));
        }
        Ok(Self {
            samples,
            labels,
            classes: None,
            split,
            provenance: provenance.into(),
        })
    }

    pub fn with_classes(mut self, classes: Vec<usize>) -> Result<Self> {
        if classes.len() != self.labels.len() {
            return Err(Error::Shape(
                "class vector length differs from label count".into(),
            ));
        }
        self.classes = Some(classes);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn width(&self) -> usize {
        self.samples.cols()
    }

    pub fn anomalies(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn prevalence(&self) -> f64 {
        self.anomalies() as f64 / self.len().max(1) as f64
    }

    /// Keeps the given rows, in order.
    pub fn subset(&self, rows: &[usize]) -> Self {
        Self {
            samples: self.samples.select_rows(rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            classes: self
                .classes
                .as_ref()
                .map(|c| rows.iter().map(|&r| c[r]).collect()),
            split: self.split,
            provenance: self.provenance.clone(),
        }
    }
}
