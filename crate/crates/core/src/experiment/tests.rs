use std::path::Path;

use super::*;
use crate::error::Error;
use crate::scoring::Scorer;

const TINY: &str = "\
# small toy run
run.name = tiny
run.seed = 3
dataset.kind = toy
dataset.samples = 256
dataset.test_normal = 40
dataset.test_anomalies = 40
model.generator_hidden = 16
model.critic_hidden = 16
model.encoder_hidden = 16
training.epochs = 1
training.batch_size = 32
encoder.epochs = 1
encoder.batch_size = 32
inversion.steps = 10
inversion.restarts = 1
";

fn tiny_in(dir: &Path, extra: &str) -> RunOptions {
    let path = dir.join("tiny.cfg");
    std::fs::write(&path, format!("{TINY}run.out = out\n{extra}")).unwrap();
    RunOptions::with_config(path)
}

#[test]
fn parses_defaults_and_overrides() {
    let cfg = ExperimentConfig::parse(TINY, Path::new("/base"), "fallback").unwrap();
    assert_eq!(cfg.name, "tiny");
    assert_eq!(cfg.seed, 3);
    assert_eq!(cfg.training.seed, 3);
    assert_eq!(cfg.dataset.toy.seed, 3);
    assert_eq!(cfg.training.batch_size, 32);
    assert_eq!(cfg.training.critic_steps, 5);
    assert_eq!(cfg.training.lambda_gp, 10.0);
    assert_eq!(cfg.precision, Precision::F64);
    assert_eq!(cfg.out, Path::new("runs/tiny"));
    assert_eq!(cfg.scorer.kind, Scorer::EncoderMse);
    assert_eq!(cfg.source, TINY);
    let g = cfg.generator_spec(2).unwrap();
    assert_eq!(g.input_width(), 2);
}

#[test]
fn relative_paths_follow_the_config_directory() {
    let text =
        "dataset.kind = csv\ndataset.path = a.csv\ndataset.test_path = /abs/b.csv\nrun.out = o\n";
    let cfg = ExperimentConfig::parse(text, Path::new("/base"), "x").unwrap();
    assert_eq!(cfg.dataset.path.as_deref(), Some(Path::new("/base/a.csv")));
    assert_eq!(
        cfg.dataset.test_path.as_deref(),
        Some(Path::new("/abs/b.csv"))
    );
    assert_eq!(cfg.out, Path::new("/base/o"));
}

#[test]
fn rejects_bad_configs_with_line_numbers() {
    let cases = [
        ("dataset.kind = toy\ntraining.lamda = 3\n", "line 2"),
        ("dataset.kind = toy\ndataset.kind = toy\n", "duplicate"),
        (
            "dataset.kind = toy\ntraining.epochs = -1\n",
            "non-negative integer",
        ),
        ("dataset.kind = toy\nrun.precision = f16\n", "f32, f64"),
        ("dataset.kind = toy\nnonsense\n", "line 2"),
        ("run.seed = 1\n", "dataset.kind is required"),
        ("dataset.kind = mnist\ndataset.path = x\n", "digit"),
        (
            "dataset.kind = toy\ntraining.optimizer = adam\ntraining.decay = 0.9\n",
            "rmsprop",
        ),
        ("dataset.kind = toy\nscorer.alpha_mix = 2\n", "[0, 1]"),
    ];
    for (text, needle) in cases {
        match ExperimentConfig::parse(text, Path::new("."), "x") {
            Err(Error::Config(msg)) => assert!(msg.contains(needle), "{msg:?} lacks {needle:?}"),
            other => panic!("{text:?} gave {other:?}"),
        }
    }
}

#[test]
fn every_schema_key_parses() {
    let keys: Vec<_> = config_keys().collect();
    assert!(keys.contains(&"training.lambda_gp"));
    assert!(keys.contains(&"scorer.lambda_mix"));
    assert!(keys.contains(&"inversion.lambda_prior"));
    let mut seen = std::collections::HashSet::new();
    assert!(keys.iter().all(|k| seen.insert(*k)));
}

#[test]
fn exit_codes() {
    assert_eq!(exit_code(&Error::Config("x".into())), EXIT_CONFIG);
    assert_eq!(exit_code(&Error::MissingData("p".into())), EXIT_DATA);
    assert_eq!(
        exit_code(&Error::Diverged {
            update: 1,
            loss: 1e7,
            limit: 1e6
        }),
        EXIT_DIVERGED
    );
    assert_eq!(
        exit_code(&Error::Checksum {
            path: "p".into(),
            stored: 1,
            computed: 2
        }),
        EXIT_CHECKSUM
    );
}

#[test]
fn full_pipeline_on_tiny_toy() {
    let dir = tempfile::tempdir().unwrap();
    let opts = tiny_in(dir.path(), "");
    let out = dir.path().join("out");

    let m = cmd_train(&opts).unwrap();
    assert_eq!(m.metrics["epochs"], 1);
    assert!(m.metrics.contains_key("modes_covered"));
    for f in [
        GENERATOR_FILE,
        CRITIC_FILE,
        TRAINING_LOG_FILE,
        MANIFEST_FILE,
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let read = RunManifest::read(&out.join(MANIFEST_FILE)).unwrap();
    assert_eq!(read.command, "train");
    assert_eq!(
        read.config.as_deref(),
        Some(
            std::fs::read_to_string(opts.config.as_ref().unwrap())
                .unwrap()
                .as_str()
        )
    );

    cmd_train_encoder(&opts).unwrap();
    assert!(out.join(ENCODER_FILE).exists());
    cmd_score(&opts).unwrap();
    let reports = crate::scoring::ScoreReport::read_csv(&out.join(SCORES_FILE)).unwrap();
    assert_eq!(reports[0].len(), 80);

    let m = cmd_eval(&opts).unwrap();
    assert!(m.metrics.contains_key("auprc.encoder_mse/tiny"));
    let metrics = std::fs::read_to_string(out.join(METRICS_FILE)).unwrap();
    assert!(metrics.starts_with("scorer,model,samples,anomalies,prevalence,auprc,rule"));
    assert!(metrics.contains("average_precision_step"));
    assert!(out.join(PR_SVG_FILE).exists() && out.join(BOXPLOT_FILE).exists());

    let m = cmd_invert(&RunOptions {
        ..tiny_in(dir.path(), "inversion.limit = 5\n")
    })
    .unwrap();
    assert_eq!(m.metrics["inverted"], 5);
    let latents = std::fs::read_to_string(out.join(LATENTS_FILE)).unwrap();
    assert_eq!(latents.lines().count(), 6);
}

#[test]
fn each_scorer_runs() {
    let dir = tempfile::tempdir().unwrap();
    let opts = tiny_in(dir.path(), "");
    cmd_train(&opts).unwrap();
    cmd_train_encoder(&opts).unwrap();
    for s in Scorer::ALL {
        let o = tiny_in(dir.path(), &format!("scorer.kind = {}\n", s.name()));
        let m = cmd_score(&o).unwrap();
        assert_eq!(m.metrics["scorer"], s.name());
    }
}

#[test]
fn missing_checkpoint_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let opts = tiny_in(dir.path(), "scorer.kind = critic\n");
    match cmd_score(&opts) {
        Err(Error::Config(msg)) => assert!(msg.contains("critic"), "{msg}"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(cmd_train_encoder(&opts), Err(Error::Config(_))));
}

#[test]
fn width_mismatch_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let opts = tiny_in(dir.path(), "");
    cmd_train(&opts).unwrap();
    let wider = tiny_in(dir.path(), "model.latent_dim = 3\n");
    assert!(matches!(cmd_train_encoder(&wider), Err(Error::Config(_))));
}

#[test]
fn gen_toy_writes_labels_and_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let m = cmd_gen_toy(&tiny_in(dir.path(), "")).unwrap();
    assert_eq!(m.metrics["samples"], 256);
    let out = dir.path().join("out");
    let data =
        crate::data::read_dataset_csv(&out.join(TOY_DATA_FILE), crate::data::Split::Test).unwrap();
    assert_eq!(data.len(), 256);
    let t: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join(THRESHOLD_FILE)).unwrap()).unwrap();
    assert!(t["threshold"].as_f64().unwrap() > 0.0);
}

#[test]
fn seed_and_precision_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let mut opts = tiny_in(dir.path(), "");
    opts.seed = Some(9);
    opts.precision = Some(Precision::F32);
    opts.out = Some(dir.path().join("elsewhere"));
    let cfg = opts.resolve().unwrap();
    assert_eq!((cfg.seed, cfg.training.seed, cfg.inversion.seed), (9, 9, 9));
    let m = cmd_train(&opts).unwrap();
    assert_eq!(m.precision.as_deref(), Some("f32"));
    assert!(dir.path().join("elsewhere").join(GENERATOR_FILE).exists());
}

#[test]
fn training_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    cmd_train(&tiny_in(a.path(), "")).unwrap();
    cmd_train(&tiny_in(b.path(), "")).unwrap();
    let read =
        |d: &tempfile::TempDir, f: &str| std::fs::read(d.path().join("out").join(f)).unwrap();
    assert_eq!(read(&a, GENERATOR_FILE), read(&b, GENERATOR_FILE));
    assert_eq!(read(&a, CRITIC_FILE), read(&b, CRITIC_FILE));
}
