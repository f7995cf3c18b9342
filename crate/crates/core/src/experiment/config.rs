use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{Activity, GaussianMixtureSpec};
use crate::error::{Error, Result};
use crate::gan::{GanConfig, Variant};
use crate::latent::{InversionConfig, Reconstruction};
use crate::nn::{Activation, AdamConfig, NetworkSpec, OptimizerConfig, RmsPropConfig};
use crate::scoring::Scorer;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Int,
    Float,
    Text,
    List,
    Choice(&'static [&'static str]),
}

const ACTIVATIONS: &[&str] = &["identity", "linear", "tanh", "sigmoid", "leaky_relu"];

/// Every accepted key with its value type.
const SCHEMA: &[(&str, Kind)] = &[
    ("run.name", Kind::Text),
    ("run.seed", Kind::Int),
    ("run.out", Kind::Text),
    ("run.precision", Kind::Choice(&["f32", "f64"])),
    (
        "dataset.kind",
        Kind::Choice(&["toy", "mnist", "har", "csv"]),
    ),
    ("dataset.path", Kind::Text),
    ("dataset.test_path", Kind::Text),
    ("dataset.abnormal", Kind::Text),
    ("dataset.downsample", Kind::Int),
    ("dataset.max_train", Kind::Int),
    ("dataset.channels", Kind::List),
    ("dataset.features", Kind::Choice(&["raw", "recurrence"])),
    ("dataset.recurrence_factor", Kind::Int),
    ("dataset.fallback", Kind::Choice(&["none", "synthetic"])),
    ("dataset.synthetic_per_class", Kind::Int),
    ("dataset.samples", Kind::Int),
    ("dataset.test_normal", Kind::Int),
    ("dataset.test_anomalies", Kind::Int),
    ("dataset.anomaly_box", Kind::Float),
    ("dataset.modes", Kind::Int),
    ("dataset.radius", Kind::Float),
    ("dataset.sigma", Kind::Float),
    ("dataset.phase", Kind::Float),
    ("model.latent_dim", Kind::Int),
    ("model.generator_hidden", Kind::List),
    ("model.critic_hidden", Kind::List),
    ("model.encoder_hidden", Kind::List),
    ("model.hidden_activation", Kind::Choice(ACTIVATIONS)),
    ("model.generator_output", Kind::Choice(ACTIVATIONS)),
    (
        "training.variant",
        Kind::Choice(&["gan", "wgan_clip", "wgan_gp"]),
    ),
    ("training.batch_size", Kind::Int),
    ("training.critic_steps", Kind::Int),
    ("training.epochs", Kind::Int),
    ("training.lambda_gp", Kind::Float),
    ("training.clip", Kind::Float),
    ("training.optimizer", Kind::Choice(&["adam", "rmsprop"])),
    ("training.learning_rate", Kind::Float),
    ("training.beta1", Kind::Float),
    ("training.beta2", Kind::Float),
    ("training.epsilon", Kind::Float),
    ("training.decay", Kind::Float),
    ("training.divergence_limit", Kind::Float),
    ("training.snapshot_samples", Kind::Int),
    ("encoder.epochs", Kind::Int),
    ("encoder.batch_size", Kind::Int),
    ("encoder.learning_rate", Kind::Float),
    ("encoder.beta1", Kind::Float),
    ("encoder.beta2", Kind::Float),
    (
        "scorer.kind",
        Kind::Choice(&["critic", "anogan", "bigan_style", "encoder_mse"]),
    ),
    ("scorer.lambda_mix", Kind::Float),
    ("scorer.alpha_mix", Kind::Float),
    ("inversion.steps", Kind::Int),
    ("inversion.step_size", Kind::Float),
    ("inversion.lambda_prior", Kind::Float),
    ("inversion.restarts", Kind::Int),
    (
        "inversion.reconstruction",
        Kind::Choice(&["squared_error", "cross_entropy"]),
    ),
    ("inversion.limit", Kind::Int),
];

/// Accepted keys, in schema order.
pub fn config_keys() -> impl Iterator<Item = &'static str> {
    SCHEMA.iter().map(|(k, _)| *k)
}

fn config_err(line: usize, msg: impl fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

fn check_kind(kind: Kind, value: &str) -> std::result::Result<(), String> {
    let ok = match kind {
        Kind::Int => value.parse::<u64>().is_ok(),
        Kind::Float => value.parse::<f64>().map(f64::is_finite).unwrap_or(false),
        Kind::Text => !value.is_empty(),
        Kind::List => value.split(',').all(|v| v.trim().parse::<u64>().is_ok()),
        Kind::Choice(opts) => opts.contains(&value),
    };
    if ok {
        return Ok(());
    }
    Err(match kind {
        Kind::Int => format!("expected a non-negative integer, got `{value}`"),
        Kind::Float => format!("expected a finite number, got `{value}`"),
        Kind::Text => "expected a non-empty value".into(),
        Kind::List => format!("expected comma-separated integers, got `{value}`"),
        Kind::Choice(opts) => format!("expected one of {}, got `{value}`", opts.join(", ")),
    })
}

/// Schema-checked `section.key = value` pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigDoc {
    values: BTreeMap<String, (String, usize)>,
}

impl ConfigDoc {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                config_err(
                    line_no,
                    format!("expected `section.key = value`, got `{line}`"),
                )
            })?;
            let (key, value) = (key.trim(), value.trim());
            let kind = SCHEMA
                .iter()
                .find(|(k, _)| *k == key)
                .map(|(_, kind)| *kind)
                .ok_or_else(|| config_err(line_no, format!("unknown key `{key}`")))?;
            check_kind(kind, value).map_err(|m| config_err(line_no, format!("{key}: {m}")))?;
            if let Some((_, first)) = values.insert(key.to_string(), (value.to_string(), line_no)) {
                return Err(config_err(
                    line_no,
                    format!("duplicate key `{key}` (first set on line {first})"),
                ));
            }
        }
        Ok(Self { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|(v, _)| v.as_str())
    }

    fn parse_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.values.get(key) {
            None => Ok(default),
            Some((v, line)) => v
                .parse()
                .map_err(|_| config_err(*line, format!("{key}: cannot parse `{v}`"))),
        }
    }

    fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some((v, line)) => v
                .parse()
                .map(Some)
                .map_err(|_| config_err(*line, format!("{key}: cannot parse `{v}`"))),
        }
    }

    fn list_or(&self, key: &str, default: &[usize]) -> Vec<usize> {
        match self.get(key) {
            None => default.to_vec(),
            Some(v) => v
                .split(',')
                .map(|s| s.trim().parse().expect("checked by schema"))
                .collect(),
        }
    }

    fn fail(&self, key: &str, msg: impl fmt::Display) -> Error {
        match self.values.get(key) {
            Some((_, line)) => config_err(*line, format!("{key}: {msg}")),
            None => Error::Config(format!("{key}: {msg}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    F32,
    F64,
}

impl Precision {
    pub fn name(self) -> &'static str {
        match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        }
    }
}

impl FromStr for Precision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            other => Err(Error::Config(format!(
                "precision must be f32 or f64, got `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Toy,
    Mnist,
    Har,
    Csv,
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "toy" => Ok(DatasetKind::Toy),
            "mnist" => Ok(DatasetKind::Mnist),
            "har" => Ok(DatasetKind::Har),
            "csv" => Ok(DatasetKind::Csv),
            other => Err(Error::Config(format!("unknown dataset kind `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetSection {
    pub kind: DatasetKind,
    /// MNIST directory, HAR root, or CSV train file.
    pub path: Option<PathBuf>,
    /// CSV test file.
    pub test_path: Option<PathBuf>,
    /// Digit (MNIST) or activity name (HAR) held out as the anomaly.
    pub abnormal: Option<String>,
    pub downsample: usize,
    /// Cap on training rows (0 keeps all).
    pub max_train: usize,
    pub channels: Vec<usize>,
    pub recurrence: bool,
    pub recurrence_factor: usize,
    pub synthetic_fallback: bool,
    pub synthetic_per_class: usize,
    /// Toy training points (and `gen-toy` output size).
    pub samples: usize,
    pub test_normal: usize,
    pub test_anomalies: usize,
    /// Half-width of the square anomalies are drawn from.
    pub anomaly_box: f64,
    pub toy: GaussianMixtureSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSection {
    pub latent_dim: usize,
    pub generator_hidden: Vec<usize>,
    pub critic_hidden: Vec<usize>,
    pub encoder_hidden: Vec<usize>,
    pub hidden_activation: Activation,
    pub generator_output: Activation,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: AdamConfig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScorerSection {
    pub kind: Scorer,
    pub lambda_mix: f64,
    pub alpha_mix: f64,
}

/// Typed view of a config file. Relative paths are resolved against the
/// directory holding the file.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub out: PathBuf,
    pub precision: Precision,
    pub dataset: DatasetSection,
    pub model: ModelSection,
    pub training: GanConfig,
    pub encoder: EncoderSection,
    pub scorer: ScorerSection,
    pub inversion: InversionConfig,
    /// Maximum number of test rows to invert (0 inverts all).
    pub inversion_limit: usize,
    /// The text this config was parsed from.
    pub source: String,
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl ExperimentConfig {
    /// Parses `text`; `base` anchors relative paths and `name` is the
    /// default run name.
    pub fn parse(text: &str, base: &Path, name: &str) -> Result<Self> {
        let doc = ConfigDoc::parse(text)?;
        let kind: DatasetKind = doc
            .opt("dataset.kind")?
            .ok_or_else(|| Error::Config("dataset.kind is required".into()))?;
        let path = |key: &str| doc.get(key).map(|p| resolve(base, p));

        let toy_defaults = GaussianMixtureSpec::default();
        let seed: u64 = doc.parse_or("run.seed", 0)?;
        let toy = GaussianMixtureSpec {
            modes: doc.parse_or("dataset.modes", toy_defaults.modes)?,
            radius: doc.parse_or("dataset.radius", toy_defaults.radius)?,
            sigma: doc.parse_or("dataset.sigma", toy_defaults.sigma)?,
            phase: doc.parse_or("dataset.phase", toy_defaults.phase)?,
            seed,
        };
        toy.validate().map_err(|e| Error::Config(e.to_string()))?;
        let default_channels: Vec<usize> = crate::data::TOTAL_ACC.to_vec();
        let dataset = DatasetSection {
            kind,
            path: path("dataset.path"),
            test_path: path("dataset.test_path"),
            abnormal: doc.get("dataset.abnormal").map(str::to_string),
            downsample: doc.parse_or("dataset.downsample", 1)?,
            max_train: doc.parse_or("dataset.max_train", 0)?,
            channels: doc.list_or("dataset.channels", &default_channels),
            recurrence: doc.get("dataset.features") == Some("recurrence"),
            recurrence_factor: doc.parse_or("dataset.recurrence_factor", 4)?,
            synthetic_fallback: doc.get("dataset.fallback") == Some("synthetic"),
            synthetic_per_class: doc.parse_or("dataset.synthetic_per_class", 60)?,
            samples: doc.parse_or("dataset.samples", 100_000)?,
            test_normal: doc.parse_or("dataset.test_normal", 1000)?,
            test_anomalies: doc.parse_or("dataset.test_anomalies", 1000)?,
            anomaly_box: doc.parse_or("dataset.anomaly_box", 1.5)?,
            toy,
        };
        if dataset.downsample == 0 {
            return Err(doc.fail("dataset.downsample", "must be at least 1"));
        }
        if dataset.anomaly_box <= 0.0 {
            return Err(doc.fail("dataset.anomaly_box", "must be positive"));
        }
        if dataset.samples == 0 {
            return Err(doc.fail("dataset.samples", "must be at least 1"));
        }
        match (kind, dataset.abnormal.as_deref()) {
            (DatasetKind::Mnist, Some(d)) if d.parse::<u8>().map(|d| d <= 9).unwrap_or(false) => {}
            (DatasetKind::Mnist, _) => {
                return Err(doc.fail("dataset.abnormal", "mnist needs a digit 0-9"))
            }
            (DatasetKind::Har, Some(a)) => {
                a.parse::<Activity>()
                    .map_err(|e| doc.fail("dataset.abnormal", e))?;
            }
            (DatasetKind::Har, None) => {
                return Err(doc.fail("dataset.abnormal", "har needs an activity name"))
            }
            _ => {}
        }
        if matches!(
            kind,
            DatasetKind::Mnist | DatasetKind::Har | DatasetKind::Csv
        ) && dataset.path.is_none()
        {
            return Err(Error::Config(
                format!("dataset.path is required for {kind:?} data").to_lowercase(),
            ));
        }
        if kind == DatasetKind::Csv && dataset.test_path.is_none() {
            return Err(Error::Config(
                "dataset.test_path is required for csv data".into(),
            ));
        }

        let default_output = if kind == DatasetKind::Mnist {
            Activation::Sigmoid
        } else {
            Activation::Identity
        };
        let model = ModelSection {
            latent_dim: doc.parse_or("model.latent_dim", 2)?,
            generator_hidden: doc.list_or("model.generator_hidden", &[128, 128]),
            critic_hidden: doc.list_or("model.critic_hidden", &[128, 128]),
            encoder_hidden: doc.list_or("model.encoder_hidden", &[128]),
            hidden_activation: doc.parse_or("model.hidden_activation", Activation::LeakyRelu)?,
            generator_output: doc.parse_or("model.generator_output", default_output)?,
        };

        let variant: Variant = doc.parse_or("training.variant", Variant::WganGp)?;
        let mut training = GanConfig::new(variant);
        training.seed = seed;
        training.latent_dim = model.latent_dim;
        training.batch_size = doc.parse_or("training.batch_size", training.batch_size)?;
        training.critic_steps = doc.parse_or("training.critic_steps", training.critic_steps)?;
        training.epochs = doc.parse_or("training.epochs", training.epochs)?;
        training.lambda_gp = doc.parse_or("training.lambda_gp", training.lambda_gp)?;
        training.clip = doc.parse_or("training.clip", training.clip)?;
        training.divergence_limit =
            doc.parse_or("training.divergence_limit", training.divergence_limit)?;
        training.snapshot_samples = doc.parse_or("training.snapshot_samples", 0)?;
        let opt_name = doc
            .get("training.optimizer")
            .unwrap_or(match training.optimizer {
                OptimizerConfig::Adam(_) => "adam",
                OptimizerConfig::RmsProp(_) => "rmsprop",
            });
        training.optimizer = match opt_name {
            "adam" => {
                let d = AdamConfig::default();
                for key in ["training.decay"] {
                    if doc.get(key).is_some() {
                        return Err(doc.fail(key, "only applies to rmsprop"));
                    }
                }
                OptimizerConfig::Adam(AdamConfig {
                    lr: doc.parse_or("training.learning_rate", d.lr)?,
                    beta1: doc.parse_or("training.beta1", d.beta1)?,
                    beta2: doc.parse_or("training.beta2", d.beta2)?,
                    eps: doc.parse_or("training.epsilon", d.eps)?,
                })
            }
            _ => {
                let d = RmsPropConfig::default();
                for key in ["training.beta1", "training.beta2"] {
                    if doc.get(key).is_some() {
                        return Err(doc.fail(key, "only applies to adam"));
                    }
                }
                OptimizerConfig::RmsProp(RmsPropConfig {
                    lr: doc.parse_or("training.learning_rate", d.lr)?,
                    decay: doc.parse_or("training.decay", d.decay)?,
                    eps: doc.parse_or("training.epsilon", d.eps)?,
                })
            }
        };
        training
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;

        let ad = AdamConfig::default();
        let encoder = EncoderSection {
            epochs: doc.parse_or("encoder.epochs", 10)?,
            batch_size: doc.parse_or("encoder.batch_size", 64)?,
            optimizer: AdamConfig {
                lr: doc.parse_or("encoder.learning_rate", ad.lr)?,
                beta1: doc.parse_or("encoder.beta1", ad.beta1)?,
                beta2: doc.parse_or("encoder.beta2", ad.beta2)?,
                eps: ad.eps,
            },
        };
        if encoder.batch_size < 2 {
            return Err(doc.fail("encoder.batch_size", "must be at least 2"));
        }

        let scorer = ScorerSection {
            kind: doc.parse_or("scorer.kind", Scorer::EncoderMse)?,
            lambda_mix: doc.parse_or("scorer.lambda_mix", 0.1)?,
            alpha_mix: doc.parse_or("scorer.alpha_mix", 0.9)?,
        };
        for (key, v) in [
            ("scorer.lambda_mix", scorer.lambda_mix),
            ("scorer.alpha_mix", scorer.alpha_mix),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(doc.fail(key, "must lie in [0, 1]"));
            }
        }

        let id = InversionConfig::default();
        let inversion = InversionConfig {
            steps: doc.parse_or("inversion.steps", id.steps)?,
            step_size: doc.parse_or("inversion.step_size", id.step_size)?,
            lambda_prior: doc.parse_or("inversion.lambda_prior", id.lambda_prior)?,
            restarts: doc.parse_or("inversion.restarts", id.restarts)?,
            reconstruction: match doc.get("inversion.reconstruction") {
                Some("cross_entropy") => Reconstruction::CrossEntropy,
                _ => Reconstruction::SquaredError,
            },
            seed,
        };
        inversion
            .validate()
            .map_err(|e| Error::Config(e.to_string()))?;

        let name = doc.get("run.name").unwrap_or(name).to_string();
        let out = match doc.get("run.out") {
            Some(p) => resolve(base, p),
            None => PathBuf::from("runs").join(&name),
        };
        Ok(Self {
            name,
            seed,
            out,
            precision: doc.parse_or("run.precision", Precision::F64)?,
            dataset,
            model,
            training,
            encoder,
            scorer,
            inversion,
            inversion_limit: doc.parse_or("inversion.limit", 0)?,
            source: text.to_string(),
        })
    }

    /// Reads and parses a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let name = path.file_stem().and_then(|s| s.to_str()).unwrap_or("run");
        Self::parse(&text, &base, name)
    }

    /// Applies a seed override to every seeded component.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.dataset.toy.seed = seed;
        self.training.seed = seed;
        self.inversion.seed = seed;
    }

    fn widths(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
        let mut w = vec![input];
        w.extend_from_slice(hidden);
        w.push(output);
        w
    }

    pub fn generator_spec(&self, data_width: usize) -> Result<NetworkSpec> {
        let m = &self.model;
        NetworkSpec::dense(
            &Self::widths(m.latent_dim, &m.generator_hidden, data_width),
            m.hidden_activation,
            m.generator_output,
        )
        .map_err(|e| Error::Config(format!("generator: {e}")))
    }

    pub fn critic_spec(&self, data_width: usize) -> Result<NetworkSpec> {
        let m = &self.model;
        let out = if self.training.variant == Variant::Gan {
            Activation::Sigmoid
        } else {
            Activation::Identity
        };
        NetworkSpec::dense(
            &Self::widths(data_width, &m.critic_hidden, 1),
            m.hidden_activation,
            out,
        )
        .map_err(|e| Error::Config(format!("critic: {e}")))
    }

    /// Encoder whose last layer is batch-normalized.
    pub fn encoder_spec(&self, data_width: usize) -> Result<NetworkSpec> {
        let m = &self.model;
        let w = Self::widths(data_width, &m.encoder_hidden, m.latent_dim);
        NetworkSpec::dense(&w, m.hidden_activation, Activation::Identity)
            .and_then(|s| s.with_batch_norm(w.len() - 2))
            .map_err(|e| Error::Config(format!("encoder: {e}")))
    }
}
