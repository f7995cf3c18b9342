use rand::Rng;

use super::config::{DatasetKind, ExperimentConfig};
use crate::data::{
    downsample_images, har_anomaly_split, leave_one_digit_out_split, load_har_root, load_mnist_dir,
    read_dataset_csv, synthetic_har, Activity, HarFeatures, LabeledDataset, Split, ToyLabeler,
};
use crate::error::{Error, Result};
use crate::rng::{sub_stream, Stream};
use crate::tensor::Tensor;

/// Train and test sides of an experiment's data.
#[derive(Debug, Clone)]
pub struct Splits {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub provenance: String,
}

fn require(path: &Option<std::path::PathBuf>) -> Result<&std::path::Path> {
    let p = path
        .as_deref()
        .ok_or_else(|| Error::Config("dataset.path is not set".into()))?;
    if !p.exists() {
        return Err(Error::MissingData(p.to_path_buf()));
    }
    Ok(p)
}

/// Toy protocol: mixture draws for training; held-out draws labelled normal
/// by density plus uniform draws from the anomaly box labelled abnormal.
fn toy_splits(cfg: &ExperimentConfig) -> Result<Splits> {
    let d = &cfg.dataset;
    let spec = d.toy;
    let train = crate::data::sample_gaussian_mixture(&spec, d.samples)?;
    let labeler = ToyLabeler::new(spec)?;

    let mut rng = sub_stream(cfg.seed, Stream::Data, 0x7e57);
    let mut rows = Vec::with_capacity(d.test_normal + d.test_anomalies);
    while rows.len() < d.test_normal {
        let p = spec.sample_with(&mut rng, 1);
        if labeler.label(p.get(0, 0), p.get(0, 1)) == 0 {
            rows.push(p.row(0).to_vec());
        }
    }
    let mut found = 0;
    while found < d.test_anomalies {
        let x = rng.random_range(-d.anomaly_box..=d.anomaly_box);
        let y = rng.random_range(-d.anomaly_box..=d.anomaly_box);
        if labeler.label(x, y) == 1 {
            rows.push(vec![x, y]);
            found += 1;
        }
    }
    let labels = (0..rows.len())
        .map(|i| u8::from(i >= d.test_normal))
        .collect();
    let provenance = format!(
        "toy: {} gaussians, radius {}, sigma {}, seed {}",
        spec.modes, spec.radius, spec.sigma, spec.seed
    );
    let test_samples = if rows.is_empty() {
        Tensor::zeros(&[0, 2])
    } else {
        Tensor::from_rows(&rows)?
    };
    Ok(Splits {
        train: LabeledDataset::new(
            train.clone(),
            vec![0; train.rows()],
            Split::Train,
            &provenance,
        )?,
        test: LabeledDataset::new(test_samples, labels, Split::Test, &provenance)?,
        provenance,
    })
}

fn cap_train(mut s: Splits, max: usize) -> Splits {
    if max > 0 && s.train.len() > max {
        let rows: Vec<usize> = (0..max).collect();
        s.train = s.train.subset(&rows);
    }
    s
}

/// Builds the splits named by the config's dataset block.
pub fn load_splits(cfg: &ExperimentConfig) -> Result<Splits> {
    let d = &cfg.dataset;
    let splits = match d.kind {
        DatasetKind::Toy => toy_splits(cfg)?,
        DatasetKind::Mnist => {
            let dir = require(&d.path)?;
            let (mut images, labels) = load_mnist_dir(dir)?;
            if d.downsample > 1 {
                images = downsample_images(&images, d.downsample)?;
            }
            let digit: u8 = d
                .abnormal
                .as_deref()
                .unwrap_or("0")
                .parse()
                .map_err(|_| Error::Config("bad digit".into()))?;
            let (train, test) = leave_one_digit_out_split(&images, &labels, digit, cfg.seed)?;
            let provenance = format!(
                "mnist from {}, digit {digit} abnormal, downsample {}",
                dir.display(),
                d.downsample
            );
            Splits {
                train,
                test,
                provenance,
            }
        }
        DatasetKind::Har => {
            let activity: Activity = d.abnormal.as_deref().unwrap_or("laying").parse()?;
            let (windows, source) = match require(&d.path) {
                Ok(root) => (load_har_root(root)?, format!("har from {}", root.display())),
                Err(Error::MissingData(p)) if d.synthetic_fallback => (
                    synthetic_har(d.synthetic_per_class, cfg.seed),
                    format!("synthetic har fixture ({} missing)", p.display()),
                ),
                Err(e) => return Err(e),
            };
            let kind = if d.recurrence {
                HarFeatures::Recurrence {
                    factor: d.recurrence_factor,
                }
            } else {
                HarFeatures::Raw
            };
            let (train, test, _) =
                har_anomaly_split(&windows, activity, cfg.seed, &d.channels, kind)?;
            let provenance = format!(
                "{source}, {} abnormal, channels {:?}",
                activity.name(),
                d.channels
            );
            Splits {
                train,
                test,
                provenance,
            }
        }
        DatasetKind::Csv => {
            let train_path = require(&d.path)?;
            let test_path = require(&d.test_path)?;
            let train = read_dataset_csv(train_path, Split::Train)?;
            let test = read_dataset_csv(test_path, Split::Test)?;
            if train.width() != test.width() {
                return Err(Error::Shape(format!(
                    "train has {} columns, test {}",
                    train.width(),
                    test.width()
                )));
            }
            let provenance = format!("csv {} / {}", train_path.display(), test_path.display());
            Splits {
                train,
                test,
                provenance,
            }
        }
    };
    Ok(cap_train(splits, d.max_train))
}
