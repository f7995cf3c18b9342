use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use super::config::{DatasetKind, ExperimentConfig, Precision};
use super::dataset::{load_splits, Splits};
use super::manifest::RunManifest;
use crate::data::{
    sample_gaussian_mixture, write_dataset_csv, LabeledDataset, Split, ToyLabeler, THRESHOLD_DRAWS,
    THRESHOLD_MASS,
};
use crate::error::{Error, Result};
use crate::eval::{auprc, boxplot_csv, boxplot_stats, pr_curve, pr_curve_svg, AUPRC_RULE};
use crate::fsutil::write_atomic;
use crate::gan::{mode_coverage, GanTrainer};
use crate::latent::{invert_batch, train_encoder, EncoderBundle, EncoderConfig};
use crate::nn::{decode_checkpoint, save_checkpoint, Network, NetworkSpec};
use crate::real::Real;
use crate::rng::{sub_stream, Stream};
use crate::scoring::{
    anogan_score, bigan_style_score, critic_score, encoder_mse_score, fit_critic_interval,
    ScoreReport, Scorer,
};
use crate::tensor::Tensor;

pub const GENERATOR_FILE: &str = "generator.wgad";
pub const CRITIC_FILE: &str = "critic.wgad";
pub const ENCODER_FILE: &str = "encoder.wgad";
pub const TRAINING_LOG_FILE: &str = "training_log.csv";
pub const SNAPSHOT_FILE: &str = "snapshots.csv";
pub const ENCODER_LOG_FILE: &str = "encoder_log.csv";
pub const SCORES_FILE: &str = "scores.csv";
pub const METRICS_FILE: &str = "metrics.csv";
pub const PR_SVG_FILE: &str = "pr_curve.svg";
pub const BOXPLOT_FILE: &str = "boxplot.csv";
pub const TOY_DATA_FILE: &str = "toy.csv";
pub const THRESHOLD_FILE: &str = "threshold.json";
pub const LATENTS_FILE: &str = "latents.csv";

/// Generated samples used for the toy mode-coverage metric.
pub const COVERAGE_SAMPLES: usize = 10_000;

/// Command-line overrides and extra paths shared by all commands.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub precision: Option<Precision>,
    pub generator: Option<PathBuf>,
    pub critic: Option<PathBuf>,
    pub encoder: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub input: Option<PathBuf>,
}

impl RunOptions {
    pub fn with_config(path: impl Into<PathBuf>) -> Self {
        Self {
            config: Some(path.into()),
            ..Default::default()
        }
    }

    /// Loads the config and applies the overrides.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| Error::Config("--config is required".into()))?;
        let mut cfg = ExperimentConfig::load(path)?;
        if let Some(seed) = self.seed {
            cfg.set_seed(seed);
        }
        if let Some(p) = self.precision {
            cfg.precision = p;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        Ok(cfg)
    }
}

fn manifest_for(command: &str, opts: &RunOptions, cfg: &ExperimentConfig) -> RunManifest {
    let mut m = RunManifest::new(command);
    m.config_path = opts.config.clone();
    m.config = Some(cfg.source.clone());
    m.seed = Some(cfg.seed);
    m.precision = Some(cfg.precision.name().into());
    m
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn role_path(explicit: &Option<PathBuf>, out: &Path, file: &str) -> PathBuf {
    explicit.clone().unwrap_or_else(|| out.join(file))
}

/// Loads a checkpoint for `spec`. A missing file is reported as a
/// configuration problem naming the role; a width mismatch likewise.
fn load_network<T: Real>(path: &Path, spec: NetworkSpec, role: &str) -> Result<Network<T>> {
    if !path.exists() {
        return Err(Error::Config(format!(
            "a {role} checkpoint is required; {} does not exist",
            path.display()
        )));
    }
    let bytes = std::fs::read(path)?;
    let params = decode_checkpoint::<T>(&bytes, path)?;
    Network::from_params(spec, params).map_err(|e| match e {
        Error::Shape(msg) => Error::Config(format!(
            "{role} checkpoint {} does not match the config: {msg}",
            path.display()
        )),
        other => other,
    })
}

fn cast_split<T: Real>(d: &LabeledDataset) -> Tensor<T> {
    d.samples.cast()
}

/// Trains the configured GAN variant.
pub fn cmd_train(opts: &RunOptions) -> Result<RunManifest> {
    let cfg = opts.resolve()?;
    match cfg.precision {
        Precision::F32 => train_impl::<f32>(opts, &cfg),
        Precision::F64 => train_impl::<f64>(opts, &cfg),
    }
}

fn train_impl<T: Real>(opts: &RunOptions, cfg: &ExperimentConfig) -> Result<RunManifest> {
    let start = Instant::now();
    let mut m = manifest_for("train", opts, cfg);
    let splits = load_splits(cfg)?;
    m.dataset = Some(splits.provenance.clone());
    m.timings_ms.insert("data".into(), ms(start));
    let width = splits.train.width();
    let gen_spec = cfg.generator_spec(width)?;
    let critic_spec = cfg.critic_spec(width)?;

    let t = Instant::now();
    let trainer = GanTrainer::<T>::new(
        cfg.training.clone(),
        gen_spec,
        critic_spec,
        &splits.train.samples,
    )?;
    let updates_per_epoch = trainer.updates_per_epoch();
    let trained = trainer.train()?;
    m.timings_ms.insert("training".into(), ms(t));

    let gen_path = cfg.out.join(GENERATOR_FILE);
    let critic_path = cfg.out.join(CRITIC_FILE);
    save_checkpoint(&trained.generator.params, &gen_path)?;
    save_checkpoint(&trained.critic.params, &critic_path)?;
    m.checkpoints.insert("generator".into(), gen_path);
    m.checkpoints.insert("critic".into(), critic_path);
    let log_path = cfg.out.join(TRAINING_LOG_FILE);
    trained.log.write_csv(&log_path)?;
    m.output(&log_path);
    if !trained.log.snapshots.is_empty() {
        let path = cfg.out.join(SNAPSHOT_FILE);
        let mut text = String::from("epoch");
        for j in 0..width {
            let _ = write!(text, ",x{j}");
        }
        text.push('\n');
        for (epoch, s) in &trained.log.snapshots {
            for i in 0..s.rows() {
                let _ = write!(text, "{epoch}");
                for v in s.row(i) {
                    let _ = write!(text, ",{v}");
                }
                text.push('\n');
            }
        }
        write_atomic(&path, text.as_bytes())?;
        m.output(&path);
    }

    m.metric("variant", cfg.training.variant.name());
    m.metric("epochs", cfg.training.epochs);
    m.metric("updates_per_epoch", updates_per_epoch);
    m.metric("generator_updates", trained.log.generator_updates());
    m.metric("critic_updates", trained.log.critic_updates());
    m.metric("epoch_critic_means", trained.log.epoch_critic_means());
    m.metric(
        "generator_checksum",
        format!("{:08x}", trained.generator.params.checksum()),
    );
    m.metric(
        "critic_checksum",
        format!("{:08x}", trained.critic.params.checksum()),
    );
    if cfg.dataset.kind == DatasetKind::Toy {
        let mut rng = sub_stream(cfg.seed, Stream::Evaluation, 0xc0);
        let samples: Tensor = trained.generator.sample(&mut rng, COVERAGE_SAMPLES)?.cast();
        let spec = cfg.dataset.toy;
        let cov = mode_coverage(&samples, &spec.centers(), 3.0 * spec.sigma)?;
        m.metric("modes_covered", cov.covered);
        m.metric("mode_fractions", cov.fractions);
    }
    m.timings_ms.insert("total".into(), ms(start));
    m.write(&cfg.out)?;
    Ok(m)
}

/// Trains an encoder under a frozen generator checkpoint.
pub fn cmd_train_encoder(opts: &RunOptions) -> Result<RunManifest> {
    let cfg = opts.resolve()?;
    match cfg.precision {
        Precision::F32 => train_encoder_impl::<f32>(opts, &cfg),
        Precision::F64 => train_encoder_impl::<f64>(opts, &cfg),
    }
}

fn normal_rows(test: &LabeledDataset) -> Vec<usize> {
    (0..test.len()).filter(|&i| test.labels[i] == 0).collect()
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn train_encoder_impl<T: Real>(opts: &RunOptions, cfg: &ExperimentConfig) -> Result<RunManifest> {
    let start = Instant::now();
    let mut m = manifest_for("train-encoder", opts, cfg);
    let splits = load_splits(cfg)?;
    m.dataset = Some(splits.provenance.clone());
    let width = splits.train.width();
    let gen_path = role_path(&opts.generator, &cfg.out, GENERATOR_FILE);
    let before = if gen_path.exists() {
        Some(std::fs::read(&gen_path)?)
    } else {
        None
    };
    let generator: Network<T> = load_network(&gen_path, cfg.generator_spec(width)?, "generator")?;

    let t = Instant::now();
    let enc_cfg = EncoderConfig {
        epochs: cfg.encoder.epochs,
        batch_size: cfg.encoder.batch_size,
        optimizer: cfg.encoder.optimizer,
        seed: cfg.seed,
    };
    let bundle = train_encoder(
        &generator,
        cfg.encoder_spec(width)?,
        &splits.train.samples,
        &enc_cfg,
    )?;
    m.timings_ms.insert("training".into(), ms(t));
    let after = std::fs::read(&gen_path)?;
    if before.as_deref() != Some(after.as_slice()) {
        return Err(Error::FrozenModified {
            before: crc32fast::hash(before.as_deref().unwrap_or_default()),
            after: crc32fast::hash(&after),
        });
    }

    let enc_path = cfg.out.join(ENCODER_FILE);
    save_checkpoint(&bundle.encoder.params, &enc_path)?;
    m.checkpoints.insert("encoder".into(), enc_path);
    m.checkpoints.insert("generator".into(), gen_path);
    let log_path = cfg.out.join(ENCODER_LOG_FILE);
    let mut text = String::from("epoch,mean_loss\n");
    for (e, l) in bundle.log.epoch_means.iter().enumerate() {
        let _ = writeln!(text, "{e},{l}");
    }
    write_atomic(&log_path, text.as_bytes())?;
    m.output(&log_path);

    let test: Tensor<T> = cast_split(&splits.test);
    let mse = encoder_mse_score(&bundle, &test)?;
    let normal: Vec<f64> = normal_rows(&splits.test)
        .into_iter()
        .map(|i| mse[i])
        .collect();
    let abnormal: Vec<f64> = (0..mse.len())
        .filter(|&i| splits.test.labels[i] == 1)
        .map(|i| mse[i])
        .collect();
    m.metric("epoch_losses", bundle.log.epoch_means.clone());
    if !normal.is_empty() {
        m.metric("heldout_normal_mse", mean(&normal));
    }
    if !abnormal.is_empty() {
        m.metric("abnormal_mse", mean(&abnormal));
    }
    m.timings_ms.insert("total".into(), ms(start));
    m.write(&cfg.out)?;
    Ok(m)
}

/// Scores the test split with the configured scorer.
pub fn cmd_score(opts: &RunOptions) -> Result<RunManifest> {
    let cfg = opts.resolve()?;
    match cfg.precision {
        Precision::F32 => score_impl::<f32>(opts, &cfg),
        Precision::F64 => score_impl::<f64>(opts, &cfg),
    }
}

struct Models<T: Real> {
    generator: Option<Network<T>>,
    critic: Option<Network<T>>,
    encoder: Option<Network<T>>,
}

fn load_models<T: Real>(
    opts: &RunOptions,
    cfg: &ExperimentConfig,
    width: usize,
    scorer: Scorer,
    m: &mut RunManifest,
) -> Result<Models<T>> {
    let (need_g, need_c, need_e) = match scorer {
        Scorer::Critic => (false, true, false),
        Scorer::Anogan => (true, true, false),
        Scorer::BiganStyle => (true, true, true),
        Scorer::EncoderMse => (true, false, true),
    };
    let mut load = |need: bool,
                    explicit: &Option<PathBuf>,
                    file: &str,
                    spec: Result<NetworkSpec>,
                    role: &str| {
        if !need {
            return Ok(None);
        }
        let path = role_path(explicit, &cfg.out, file);
        let net = load_network::<T>(&path, spec?, &format!("{role} ({} scorer)", scorer.name()))?;
        m.checkpoints.insert(role.into(), path);
        Ok::<_, Error>(Some(net))
    };
    Ok(Models {
        generator: load(
            need_g,
            &opts.generator,
            GENERATOR_FILE,
            cfg.generator_spec(width),
            "generator",
        )?,
        critic: load(
            need_c,
            &opts.critic,
            CRITIC_FILE,
            cfg.critic_spec(width),
            "critic",
        )?,
        encoder: load(
            need_e,
            &opts.encoder,
            ENCODER_FILE,
            cfg.encoder_spec(width),
            "encoder",
        )?,
    })
}

fn compute_scores<T: Real>(
    cfg: &ExperimentConfig,
    splits: &Splits,
    models: Models<T>,
    m: &mut RunManifest,
) -> Result<Vec<f64>> {
    let test: Tensor<T> = cast_split(&splits.test);
    let Models {
        generator,
        critic,
        encoder,
    } = models;
    match cfg.scorer.kind {
        Scorer::Critic => {
            let critic = critic.expect("loaded");
            let interval = fit_critic_interval(&critic, &cast_split::<T>(&splits.train))?;
            m.metric("critic_interval", json!([interval.lower, interval.upper]));
            critic_score(&critic, &interval, &test)
        }
        Scorer::Anogan => {
            let (g, c) = (generator.expect("loaded"), critic.expect("loaded"));
            let inv = invert_batch(&g, &test, &cfg.inversion)?;
            let k = g.spec.input_width();
            let z = Tensor::matrix(
                inv.len(),
                k,
                inv.iter().flat_map(|i| i.z.data().to_vec()).collect(),
            )?;
            anogan_score(&c, &g, &test, &z, cfg.scorer.lambda_mix)
        }
        Scorer::BiganStyle => {
            let bundle = EncoderBundle::new(encoder.expect("loaded"), generator.expect("loaded"))?;
            bigan_style_score(
                &bundle,
                &critic.expect("loaded"),
                &test,
                cfg.scorer.alpha_mix,
            )
        }
        Scorer::EncoderMse => {
            let bundle = EncoderBundle::new(encoder.expect("loaded"), generator.expect("loaded"))?;
            encoder_mse_score(&bundle, &test)
        }
    }
}

fn score_impl<T: Real>(opts: &RunOptions, cfg: &ExperimentConfig) -> Result<RunManifest> {
    let start = Instant::now();
    let mut m = manifest_for("score", opts, cfg);
    let splits = load_splits(cfg)?;
    m.dataset = Some(splits.provenance.clone());
    let models = load_models::<T>(opts, cfg, splits.train.width(), cfg.scorer.kind, &mut m)?;
    let t = Instant::now();
    let scores = compute_scores(cfg, &splits, models, &mut m)?;
    m.timings_ms.insert("scoring".into(), ms(t));
    let report = ScoreReport::new(
        scores,
        splits.test.labels.clone(),
        cfg.scorer.kind,
        cfg.name.clone(),
    )?;
    let path = cfg.out.join(SCORES_FILE);
    report.write_csv(&path)?;
    m.output(&path);
    m.metric("scorer", cfg.scorer.kind.name());
    m.metric("samples", report.len());
    m.metric("anomalies", splits.test.anomalies());
    m.metric("prevalence", splits.test.prevalence());
    if let Ok(curve) = pr_curve(&report.scores, &report.labels) {
        m.metric("auprc", auprc(&curve));
    }
    m.timings_ms.insert("total".into(), ms(start));
    m.write(&cfg.out)?;
    Ok(m)
}

/// PR analysis of a score report: metrics CSV, PR plot and boxplot CSV.
pub fn cmd_eval(opts: &RunOptions) -> Result<RunManifest> {
    let start = Instant::now();
    let cfg = opts.config.as_ref().map(|_| opts.resolve()).transpose()?;
    let out = match (&opts.out, &cfg) {
        (Some(o), _) => o.clone(),
        (None, Some(c)) => c.out.clone(),
        (None, None) => return Err(Error::Config("eval needs --out or --config".into())),
    };
    let report_path = role_path(&opts.report, &out, SCORES_FILE);
    let reports = ScoreReport::read_csv(&report_path)?;
    if reports.is_empty() {
        return Err(Error::Empty(format!(
            "no rows in {}",
            report_path.display()
        )));
    }
    let mut m = match &cfg {
        Some(c) => manifest_for("eval", opts, c),
        None => RunManifest::new("eval"),
    };
    let mut metrics = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::invalid(e.to_string());
    metrics
        .write_record([
            "scorer",
            "model",
            "samples",
            "anomalies",
            "prevalence",
            "auprc",
            "rule",
        ])
        .map_err(csv_err)?;
    let mut curves = Vec::new();
    let mut boxes = Vec::new();
    for r in &reports {
        let curve = pr_curve(&r.scores, &r.labels)?;
        let ap = auprc(&curve);
        metrics
            .write_record([
                r.scorer.name().to_string(),
                r.model.clone(),
                r.len().to_string(),
                curve.positives.to_string(),
                curve.prevalence().to_string(),
                ap.to_string(),
                AUPRC_RULE.to_string(),
            ])
            .map_err(csv_err)?;
        let label = format!("{}/{}", r.scorer.name(), r.model);
        m.metric(&format!("auprc.{label}"), ap);
        m.metric(&format!("prevalence.{label}"), curve.prevalence());
        boxes.push((label.clone(), boxplot_stats(&r.scores, &r.labels)?));
        curves.push((label, curve));
    }
    m.metric("auprc_rule", AUPRC_RULE);

    let metrics_path = out.join(METRICS_FILE);
    let bytes = metrics
        .into_inner()
        .map_err(|e| Error::invalid(e.to_string()))?;
    write_atomic(&metrics_path, &bytes)?;
    let svg_path = out.join(PR_SVG_FILE);
    let title = format!(
        "Precision-recall: {}",
        report_path
            .file_name()
            .and_then(|s| s.to_str())
            .unwrap_or("scores")
    );
    write_atomic(&svg_path, pr_curve_svg(&curves, &title).as_bytes())?;
    let box_path = out.join(BOXPLOT_FILE);
    write_atomic(&box_path, boxplot_csv(&boxes)?.as_bytes())?;
    for p in [&metrics_path, &svg_path, &box_path] {
        m.output(p);
    }
    m.checkpoints.clear();
    m.timings_ms.insert("total".into(), ms(start));
    m.write(&out)?;
    Ok(m)
}

/// Writes a seeded toy dataset with density labels and its threshold.
pub fn cmd_gen_toy(opts: &RunOptions) -> Result<RunManifest> {
    let start = Instant::now();
    let cfg = opts.resolve()?;
    let mut m = manifest_for("gen-toy", opts, &cfg);
    let spec = cfg.dataset.toy;
    let n = cfg.dataset.samples;
    let points = sample_gaussian_mixture(&spec, n)?;
    let labeler = ToyLabeler::new(spec)?;
    let labels = labeler.label_all(&points);
    let provenance = format!("toy mixture, seed {}", spec.seed);
    let data = LabeledDataset::new(points, labels, Split::Test, provenance.clone())?;
    let path = cfg.out.join(TOY_DATA_FILE);
    write_dataset_csv(&path, &data)?;
    m.output(&path);
    let threshold = json!({
        "threshold": labeler.threshold,
        "mass": THRESHOLD_MASS,
        "draws": THRESHOLD_DRAWS,
        "seed": spec.seed,
        "modes": spec.modes,
        "radius": spec.radius,
        "sigma": spec.sigma,
        "phase": spec.phase,
    });
    let tpath = cfg.out.join(THRESHOLD_FILE);
    let text =
        serde_json::to_string_pretty(&threshold).map_err(|e| Error::invalid(e.to_string()))?;
    write_atomic(&tpath, text.as_bytes())?;
    m.output(&tpath);
    m.dataset = Some(provenance);
    m.metric("samples", n);
    m.metric("below_threshold", data.anomalies());
    m.metric("threshold", labeler.threshold);
    m.timings_ms.insert("total".into(), ms(start));
    m.write(&cfg.out)?;
    Ok(m)
}

/// Recovers latent codes for test rows (or `--input` rows) by gradient
/// descent on the frozen generator.
pub fn cmd_invert(opts: &RunOptions) -> Result<RunManifest> {
    let cfg = opts.resolve()?;
    match cfg.precision {
        Precision::F32 => invert_impl::<f32>(opts, &cfg),
        Precision::F64 => invert_impl::<f64>(opts, &cfg),
    }
}

fn invert_impl<T: Real>(opts: &RunOptions, cfg: &ExperimentConfig) -> Result<RunManifest> {
    let start = Instant::now();
    let mut m = manifest_for("invert", opts, cfg);
    let (queries, labels): (Tensor, Option<Vec<u8>>) = match &opts.input {
        Some(path) => {
            if !path.exists() {
                return Err(Error::MissingData(path.clone()));
            }
            m.dataset = Some(format!("rows of {}", path.display()));
            (crate::data::read_matrix_csv(path)?.1, None)
        }
        None => {
            let splits = load_splits(cfg)?;
            m.dataset = Some(splits.provenance.clone());
            (splits.test.samples, Some(splits.test.labels))
        }
    };
    let n = if cfg.inversion_limit > 0 {
        queries.rows().min(cfg.inversion_limit)
    } else {
        queries.rows()
    };
    let rows: Vec<usize> = (0..n).collect();
    let queries: Tensor<T> = queries.select_rows(&rows).cast();
    let gen_path = role_path(&opts.generator, &cfg.out, GENERATOR_FILE);
    let generator: Network<T> =
        load_network(&gen_path, cfg.generator_spec(queries.cols())?, "generator")?;
    m.checkpoints.insert("generator".into(), gen_path);

    let t = Instant::now();
    let inv = invert_batch(&generator, &queries, &cfg.inversion)?;
    m.timings_ms.insert("inversion".into(), ms(t));
    let k = generator.spec.input_width();
    let mut text = String::from("sample_id,label,loss");
    for j in 0..k {
        let _ = write!(text, ",z{j}");
    }
    text.push('\n');
    for (i, r) in inv.iter().enumerate() {
        let label = labels
            .as_ref()
            .map(|l| l[i].to_string())
            .unwrap_or_default();
        let _ = write!(text, "{i},{label},{}", r.loss);
        for v in r.z.data() {
            let _ = write!(text, ",{v}");
        }
        text.push('\n');
    }
    let path = cfg.out.join(LATENTS_FILE);
    write_atomic(&path, text.as_bytes())?;
    m.output(&path);
    m.metric("inverted", n);
    let losses: Vec<f64> = inv.iter().map(|r| r.loss).collect();
    if let Some(l) = &labels {
        for (name, want) in [("median_loss_normal", 0u8), ("median_loss_abnormal", 1u8)] {
            let mut v: Vec<f64> = (0..n)
                .filter(|&i| l[i] == want)
                .map(|i| losses[i])
                .collect();
            if !v.is_empty() {
                v.sort_by(f64::total_cmp);
                m.metric(name, crate::eval::quantile_inclusive(&v, 0.5));
            }
        }
    }
    m.timings_ms.insert("total".into(), ms(start));
    m.write(&cfg.out)?;
    Ok(m)
}
