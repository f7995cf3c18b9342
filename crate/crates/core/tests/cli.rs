use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use wgad::experiment::{RunManifest, EXIT_CHECKSUM, EXIT_CONFIG, EXIT_DATA, MANIFEST_FILE};

const TINY: &str = "\
run.name = cli
run.out = out
dataset.kind = toy
dataset.samples = 200
dataset.test_normal = 30
dataset.test_anomalies = 30
model.generator_hidden = 8
model.critic_hidden = 8
model.encoder_hidden = 8
training.epochs = 1
training.batch_size = 20
encoder.epochs = 1
encoder.batch_size = 20
inversion.steps = 5
inversion.restarts = 1
inversion.limit = 4
";

fn wgad(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wgad"))
        .args(args)
        .env("WGAD_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn config(dir: &Path, extra: &str) -> PathBuf {
    let p = dir.join("run.cfg");
    std::fs::write(&p, format!("{TINY}{extra}")).unwrap();
    p
}

fn ok(out: &Output) {
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn end_to_end_subcommands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "");
    let c = cfg.to_str().unwrap();
    let out = dir.path().join("out");
    for cmd in [
        "gen-toy",
        "train",
        "train-encoder",
        "score",
        "eval",
        "invert",
    ] {
        let o = wgad(&[cmd, "--config", c]);
        ok(&o);
        let m = RunManifest::read(&out.join(MANIFEST_FILE)).unwrap();
        assert_eq!(m.command, cmd);
    }
    for f in [
        "toy.csv",
        "threshold.json",
        "generator.wgad",
        "critic.wgad",
        "encoder.wgad",
        "scores.csv",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    for f in ["metrics.csv", "pr_curve.svg", "boxplot.csv", "latents.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "");
    let other = dir.path().join("other");
    let o = wgad(&[
        "train",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        other.to_str().unwrap(),
        "--seed",
        "4",
        "--precision",
        "f32",
    ]);
    ok(&o);
    let m = RunManifest::read(&other.join(MANIFEST_FILE)).unwrap();
    assert_eq!(m.seed, Some(4));
    assert_eq!(m.precision.as_deref(), Some("f32"));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "training.lamda = 1\n");
    let o = wgad(&["train", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown key `training.lamda`"));

    let cfg = config(dir.path(), "");
    let o = wgad(&["score", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    assert!(String::from_utf8_lossy(&o.stderr).contains("checkpoint is required"));
}

#[test]
fn missing_data_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m.cfg");
    std::fs::write(
        &p,
        "dataset.kind = mnist\ndataset.path = nowhere\ndataset.abnormal = 0\n",
    )
    .unwrap();
    let o = wgad(&["train", "--config", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_DATA));
}

#[test]
fn corrupted_checkpoint_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "");
    let c = cfg.to_str().unwrap();
    ok(&wgad(&["train", "--config", c]));
    let gen = dir.path().join("out").join("generator.wgad");
    let mut bytes = std::fs::read(&gen).unwrap();
    bytes[20] ^= 0xff;
    std::fs::write(&gen, bytes).unwrap();
    let o = wgad(&["invert", "--config", c]);
    assert_eq!(o.status.code(), Some(EXIT_CHECKSUM));
}

#[test]
fn bad_thread_count_is_rejected() {
    let o = Command::new(env!("CARGO_BIN_EXE_wgad"))
        .args(["eval", "--out", "."])
        .env("WGAD_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
}
