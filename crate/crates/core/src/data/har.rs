//! UCI-HAR inertial windows.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::recurrence::recurrence_matrix;
use super::split::split_rows;
use super::{LabeledDataset, Split};
use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};
use crate::tensor::Tensor;

pub const HAR_STEPS: usize = 128;
pub const HAR_RATE_HZ: f64 = 50.0;

/// Signal file stems in channel order.
pub const HAR_CHANNELS: [&str; 9] = [
    "total_acc_x",
    "total_acc_y",
    "total_acc_z",
    "body_acc_x",
    "body_acc_y",
    "body_acc_z",
    "body_gyro_x",
    "body_gyro_y",
    "body_gyro_z",
];

/// Channel indices of the total-acceleration signals.
pub const TOTAL_ACC: [usize; 3] = [0, 1, 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activity {
    Walking,
    WalkingUpstairs,
    WalkingDownstairs,
    Sitting,
    Standing,
    Laying,
}

impl Activity {
    pub const ALL: [Activity; 6] = [
        Self::Walking,
        Self::WalkingUpstairs,
        Self::WalkingDownstairs,
        Self::Sitting,
        Self::Standing,
        Self::Laying,
    ];

    /// Label used in the dataset files (1-6).
    pub fn code(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_code(code: u8) -> Result<Self> {
        Self::ALL
            .get((code as usize).wrapping_sub(1))
            .copied()
            .ok_or_else(|| Error::format("HAR labels", format!("activity code {code} outside 1-6")))
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Walking => "walking",
            Self::WalkingUpstairs => "walking_upstairs",
            Self::WalkingDownstairs => "walking_downstairs",
            Self::Sitting => "sitting",
            Self::Standing => "standing",
            Self::Laying => "laying",
        }
    }
}

impl std::str::FromStr for Activity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        Self::ALL
            .into_iter()
            .find(|a| a.name() == key)
            .ok_or_else(|| Error::invalid(format!("unknown activity `{s}`")))
    }
}

/// One `T x C` window.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesWindow {
    pub values: Tensor,
    pub sampling_hz: f64,
    pub activity: Activity,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingData(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

fn parse_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let text = read_text(path)?;
    let mut rows = Vec::new();
    for (ln, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let row = line
            .split_whitespace()
            .map(|t| {
                t.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        Error::format(
                            "HAR signal",
                            format!("{}:{}: bad value `{t}`", path.display(), ln + 1),
                        )
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != HAR_STEPS {
            return Err(Error::format(
                "HAR signal",
                format!(
                    "{}:{}: {} values, expected {HAR_STEPS}",
                    path.display(),
                    ln + 1,
                    row.len()
                ),
            ));
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Loads one split directory holding `y_<split>.txt` and the nine
/// `<signal>_<split>.txt` files, either directly or under `Inertial Signals/`.
pub fn load_har(dir: &Path) -> Result<Vec<TimeSeriesWindow>> {
    let label_file = fs::read_dir(dir)
        .map_err(|_| Error::MissingData(dir.to_path_buf()))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .find(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("y_") && n.ends_with(".txt"))
        })
        .ok_or_else(|| Error::MissingData(dir.join("y_<split>.txt")))?;
    let stem = label_file
        .file_stem()
        .and_then(|s| s.to_str())
        .expect("utf-8 name");
    let suffix = &stem[2..];
    let labels = read_text(&label_file)?
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            l.trim()
                .parse::<u8>()
                .map_err(|_| Error::format("HAR labels", format!("bad label `{l}`")))
                .and_then(Activity::from_code)
        })
        .collect::<Result<Vec<_>>>()?;
    let signal_dir = if dir.join("Inertial Signals").is_dir() {
        dir.join("Inertial Signals")
    } else {
        dir.to_path_buf()
    };
    let mut signals = Vec::with_capacity(HAR_CHANNELS.len());
    for name in HAR_CHANNELS {
        let m = parse_matrix(&signal_dir.join(format!("{name}_{suffix}.txt")))?;
        if m.len() != labels.len() {
            return Err(Error::format(
                "HAR signal",
                format!("{name}: {} rows but {} labels", m.len(), labels.len()),
            ));
        }
        signals.push(m);
    }
    Ok(labels
        .iter()
        .enumerate()
        .map(|(w, &activity)| {
            let mut data = Vec::with_capacity(HAR_STEPS * HAR_CHANNELS.len());
            for t in 0..HAR_STEPS {
                data.extend(signals.iter().map(|s| s[w][t]));
            }
            TimeSeriesWindow {
                values: Tensor::from_parts(vec![HAR_STEPS, HAR_CHANNELS.len()], data),
                sampling_hz: HAR_RATE_HZ,
                activity,
            }
        })
        .collect())
}

/// Loads `root/train` and `root/test` when present, otherwise `root` itself.
pub fn load_har_root(root: &Path) -> Result<Vec<TimeSeriesWindow>> {
    let parts: Vec<_> = ["train", "test"]
        .iter()
        .map(|s| root.join(s))
        .filter(|p| p.is_dir())
        .collect();
    if parts.is_empty() {
        return load_har(root);
    }
    let mut all = Vec::new();
    for p in parts {
        all.extend(load_har(&p)?);
    }
    Ok(all)
}

/// Writes windows in the on-disk layout [`load_har`] reads.
pub fn write_har_dir(dir: &Path, windows: &[TimeSeriesWindow], suffix: &str) -> Result<()> {
    let signal_dir = dir.join("Inertial Signals");
    fs::create_dir_all(&signal_dir)?;
    for (c, name) in HAR_CHANNELS.iter().enumerate() {
        let mut text = String::new();
        for w in windows {
            let row: Vec<String> = (0..HAR_STEPS)
                .map(|t| format!("{:e}", w.values.get(t, c)))
                .collect();
            text.push_str(&row.join(" "));
            text.push('\n');
        }
        fs::write(signal_dir.join(format!("{name}_{suffix}.txt")), text)?;
    }
    let labels: String = windows
        .iter()
        .map(|w| format!("{}\n", w.activity.code()))
        .collect();
    fs::write(dir.join(format!("y_{suffix}.txt")), labels)?;
    Ok(())
}

/// Synthetic stand-in with HAR's shape: gravity direction depends on
/// posture, gait activities add periodic motion at activity-specific rates.
pub fn synthetic_har(per_class: usize, seed: u64) -> Vec<TimeSeriesWindow> {
    let mut rng = stream_rng(seed, Stream::Data);
    let mut out = Vec::with_capacity(per_class * 6);
    for activity in Activity::ALL {
        let (gravity, freq, amp): ([f64; 3], f64, f64) = match activity {
            Activity::Walking => ([1.0, -0.1, 0.1], 1.8, 0.25),
            Activity::WalkingUpstairs => ([0.95, -0.2, 0.15], 1.5, 0.3),
            Activity::WalkingDownstairs => ([1.0, -0.15, 0.05], 2.1, 0.4),
            Activity::Sitting => ([0.75, 0.1, 0.6], 0.0, 0.0),
            Activity::Standing => ([1.0, -0.25, -0.05], 0.0, 0.0),
            Activity::Laying => ([0.0, 0.55, 0.8], 0.0, 0.0),
        };
        for _ in 0..per_class {
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            let tilt: [f64; 3] = std::array::from_fn(|_| {
                0.05 * Distribution::<f64>::sample(&StandardNormal, &mut rng)
            });
            let f = freq * (1.0 + 0.1 * rng.random_range(-1.0..1.0));
            let mut data = Vec::with_capacity(HAR_STEPS * 9);
            for t in 0..HAR_STEPS {
                let s = std::f64::consts::TAU * f * t as f64 / HAR_RATE_HZ + phase;
                let noise: [f64; 9] = std::array::from_fn(|_| {
                    0.02 * Distribution::<f64>::sample(&StandardNormal, &mut rng)
                });
                let body = [
                    amp * s.sin(),
                    0.5 * amp * (2.0 * s).sin(),
                    0.3 * amp * s.cos(),
                ];
                for k in 0..3 {
                    data.push(gravity[k] + tilt[k] + body[k] + noise[k]);
                }
                for k in 0..3 {
                    data.push(body[k] + noise[3 + k]);
                }
                for k in 0..3 {
                    data.push(0.8 * amp * (s + k as f64).cos() + noise[6 + k]);
                }
            }
            out.push(TimeSeriesWindow {
                values: Tensor::from_parts(vec![HAR_STEPS, 9], data),
                sampling_hz: HAR_RATE_HZ,
                activity,
            });
        }
    }
    out
}

/// How a window becomes a feature row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HarFeatures {
    /// Flattened `T x C` values.
    Raw,
    /// Per-channel distance plots block-averaged by `factor`, flattened.
    Recurrence { factor: usize },
}

/// Per-channel affine map fitted on the train windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelStandardizer {
    pub channels: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl ChannelStandardizer {
    pub fn fit(windows: &[&TimeSeriesWindow], channels: &[usize]) -> Result<Self> {
        if windows.is_empty() {
            return Err(Error::Empty("no windows to standardize".into()));
        }
        let mut mean = Vec::with_capacity(channels.len());
        let mut std = Vec::with_capacity(channels.len());
        for &c in channels {
            let vals: Vec<f64> = windows
                .iter()
                .flat_map(|w| (0..w.values.rows()).map(move |t| w.values.get(t, c)))
                .collect();
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let v = vals.iter().map(|x| (x - m).powi(2)).sum::<f64>() / vals.len() as f64;
            mean.push(m);
            std.push(if v > 0.0 { v.sqrt() } else { 1.0 });
        }
        Ok(Self {
            channels: channels.to_vec(),
            mean,
            std,
        })
    }

    /// Selected channels of `w`, standardized, as `T x C'`.
    pub fn apply(&self, w: &TimeSeriesWindow) -> Tensor {
        let t = w.values.rows();
        let mut data = Vec::with_capacity(t * self.channels.len());
        for i in 0..t {
            for (k, &c) in self.channels.iter().enumerate() {
                data.push((w.values.get(i, c) - self.mean[k]) / self.std[k]);
            }
        }
        Tensor::from_parts(vec![t, self.channels.len()], data)
    }
}

fn features(series: &Tensor, kind: HarFeatures) -> Result<Vec<f64>> {
    match kind {
        HarFeatures::Raw => Ok(series.data().to_vec()),
        HarFeatures::Recurrence { factor } => {
            let (t, c) = (series.rows(), series.cols());
            if factor == 0 || t % factor != 0 {
                return Err(Error::invalid(format!(
                    "factor {factor} does not divide {t} steps"
                )));
            }
            let r = recurrence_matrix(series)?;
            let r = r.data();
            let small = t / factor;
            let area = (factor * factor) as f64;
            let mut out = Vec::with_capacity(small * small * c);
            for ch in 0..c {
                for by in 0..small {
                    for bx in 0..small {
                        let mut s = 0.0;
                        for i in by * factor..(by + 1) * factor {
                            for j in bx * factor..(bx + 1) * factor {
                                s += r[(i * t + j) * c + ch];
                            }
                        }
                        out.push(s / area);
                    }
                }
            }
            Ok(out)
        }
    }
}

/// Leave-one-activity-out split over the chosen channels. Channels are
/// standardized with statistics of the train windows.
pub fn har_anomaly_split(
    windows: &[TimeSeriesWindow],
    abnormal: Activity,
    seed: u64,
    channels: &[usize],
    kind: HarFeatures,
) -> Result<(LabeledDataset, LabeledDataset, ChannelStandardizer)> {
    if channels.is_empty() || channels.iter().any(|&c| c >= HAR_CHANNELS.len()) {
        return Err(Error::invalid(
            "channel subset must be non-empty indices below 9",
        ));
    }
    let classes: Vec<usize> = windows.iter().map(|w| w.activity as usize).collect();
    let (train_rows, test_rows) = split_rows(&classes, abnormal as usize, seed)?;
    let train_windows: Vec<&TimeSeriesWindow> = train_rows.iter().map(|&r| &windows[r]).collect();
    let standardizer = ChannelStandardizer::fit(&train_windows, channels)?;
    let build = |rows: &[usize], split| -> Result<LabeledDataset> {
        let feats = rows
            .iter()
            .map(|&r| features(&standardizer.apply(&windows[r]), kind))
            .collect::<Result<Vec<_>>>()?;
        let labels = rows
            .iter()
            .map(|&r| u8::from(windows[r].activity == abnormal))
            .collect();
        LabeledDataset::new(
            Tensor::from_rows(&feats)?,
            labels,
            split,
            format!("har, {} abnormal", abnormal.name()),
        )?
        .with_classes(rows.iter().map(|&r| classes[r]).collect())
    };
    Ok((
        build(&train_rows, Split::Train)?,
        build(&test_rows, Split::Test)?,
        standardizer,
    ))
}
