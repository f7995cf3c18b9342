//! Acceptance run: one PASS/FAIL/SKIP line per criterion.
//!
//! `WGAD_ACCEPTANCE=1,7,8` restricts the run to the listed criteria.
//! Failures are reported but only turn into a non-zero exit status when
//! `WGAD_ACCEPTANCE_STRICT=1` is set.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;
use wgad::autodiff::{finite_diff_check, NodeId, Tape};
use wgad::eval::{auprc, pr_curve, PrPoint};
use wgad::experiment::{
    cmd_score, cmd_train, cmd_train_encoder, RunManifest, RunOptions, CRITIC_FILE, GENERATOR_FILE,
    TRAINING_LOG_FILE,
};
use wgad::gan::{gradient_penalty, wasserstein_loss, GanConfig, GanTrainer, Variant};
use wgad::nn::{Activation, Mode, Network, NetworkSpec};
use wgad::rng::{normal_tensor, stream_rng, sub_stream, Stream};
use wgad::Tensor;

enum Status {
    Pass,
    Fail,
    Skip,
}

struct Outcome {
    status: Status,
    detail: String,
}

fn judge(ok: bool, detail: String) -> Outcome {
    Outcome {
        status: if ok { Status::Pass } else { Status::Fail },
        detail,
    }
}

fn recipe(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../recipes")
        .join(name)
}

fn workspace_path(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel)
}

/// Central-difference step for criteria 1 and 2.
const FD_STEP: f64 = 1e-5;

fn random_dense(
    rng: &mut impl Rng,
    max_layers: usize,
    min_layers: usize,
) -> wgad::Result<NetworkSpec> {
    let layers = rng.random_range(min_layers..=max_layers);
    let widths: Vec<usize> = (0..=layers).map(|_| rng.random_range(1..=16)).collect();
    let hidden = if rng.random_bool(0.5) {
        Activation::Tanh
    } else {
        Activation::Sigmoid
    };
    let output =
        [Activation::Identity, Activation::Tanh, Activation::Sigmoid][rng.random_range(0..3)];
    NetworkSpec::dense(&widths, hidden, output)
}

fn criterion_1() -> wgad::Result<Outcome> {
    let mut rng = stream_rng(2024, Stream::Evaluation);
    let mut worst = 0.0_f64;
    for k in 0..50 {
        let spec = random_dense(&mut rng, 3, 1)?;
        let net: Network = Network::new_indexed(spec.clone(), 2024, k);
        let x = normal_tensor(&mut rng, 5, spec.input_width());
        let w = normal_tensor(&mut rng, 5, spec.output_width());
        let f = |tape: &mut Tape<f64>, ids: &BTreeMap<String, NodeId>| {
            let bound = net.bind_nodes(tape, ids);
            let xi = tape.input(x.clone());
            let out = net.forward_on(tape, &bound, xi, Mode::Train)?.output;
            let wi = tape.constant(w.clone());
            let prod = tape.mul(out, wi);
            Ok(tape.sum(prod))
        };
        worst = worst.max(finite_diff_check(f, net.params.trainable(), FD_STEP)?);
    }
    Ok(judge(
        worst < 1e-6,
        format!("50 random networks, max relative error {worst:.2e} (< 1e-6)"),
    ))
}

fn criterion_2() -> wgad::Result<Outcome> {
    let mut rng = stream_rng(77, Stream::Evaluation);
    let mut worst = 0.0_f64;
    for k in 0..20 {
        let mut spec = random_dense(&mut rng, 3, 2)?;
        let widths: Vec<usize> = spec.layers().iter().map(|l| l.input).chain([1]).collect();
        let hidden = spec.layers()[0].activation;
        spec = NetworkSpec::dense(&widths, hidden, Activation::Identity)?;
        let critic: Network = Network::new_indexed(spec.clone(), 77, k);
        let real = normal_tensor(&mut rng, 6, spec.input_width());
        let fake = normal_tensor(&mut rng, 6, spec.input_width());
        let f = |tape: &mut Tape<f64>, ids: &BTreeMap<String, NodeId>| {
            let bound = critic.bind_nodes(tape, ids);
            let mut eps = sub_stream(77, Stream::Training, k);
            gradient_penalty(tape, &critic, &bound, &real, &fake, &mut eps)
        };
        worst = worst.max(finite_diff_check(f, critic.params.trainable(), FD_STEP)?);
    }
    Ok(judge(
        worst < 1e-4,
        format!("20 random critics, max relative error {worst:.2e} (< 1e-4)"),
    ))
}

struct ToyRuns {
    _dir: tempfile::TempDir,
    seed_dirs: Vec<PathBuf>,
}

fn toy_options(seed: u64, out: &Path, cfg: &str) -> RunOptions {
    RunOptions {
        seed: Some(seed),
        out: Some(out.to_path_buf()),
        ..RunOptions::with_config(recipe(cfg))
    }
}

fn modes(m: &RunManifest) -> u64 {
    m.metrics["modes_covered"].as_u64().unwrap_or(0)
}

fn criterion_3(runs: &mut Option<ToyRuns>) -> wgad::Result<Outcome> {
    let dir = tempfile::tempdir()?;
    let start = Instant::now();
    let mut gp = Vec::new();
    let mut seed_dirs = Vec::new();
    for seed in 1..=5 {
        let out = dir.path().join(format!("wgan_gp_{seed}"));
        gp.push(modes(&cmd_train(&toy_options(
            seed,
            &out,
            "toy_wgan_gp.cfg",
        ))?));
        seed_dirs.push(out);
    }
    let gp_secs = start.elapsed().as_secs_f64();
    let mut gan = Vec::new();
    for seed in 1..=5 {
        let out = dir.path().join(format!("gan_{seed}"));
        gan.push(modes(&cmd_train(&toy_options(seed, &out, "toy_gan.cfg"))?));
    }
    *runs = Some(ToyRuns {
        _dir: dir,
        seed_dirs,
    });
    let full = gp.iter().filter(|&&m| m == 7).count();
    let ok = full >= 4 && gp_secs <= 900.0;
    Ok(judge(
        ok,
        format!(
            "WGAN-GP modes per seed {gp:?}, 7/7 in {full} of 5 (need 4), {gp_secs:.0}s (<= 900s); standard GAN alongside {gan:?}"
        ),
    ))
}

fn criterion_4(runs: &Option<ToyRuns>) -> wgad::Result<Outcome> {
    let Some(runs) = runs else {
        return Ok(Outcome {
            status: Status::Skip,
            detail: "needs the criterion 3 runs".into(),
        });
    };
    let start = Instant::now();
    let m = cmd_score(&toy_options(1, &runs.seed_dirs[0], "toy_wgan_gp.cfg"))?;
    let secs = start.elapsed().as_secs_f64();
    let ap = m.metrics["auprc"].as_f64().unwrap_or(f64::NAN);
    let n = m.metrics["samples"].as_u64().unwrap_or(0);
    let anomalies = m.metrics["anomalies"].as_u64().unwrap_or(0);
    Ok(judge(
        ap >= 0.9 && secs <= 120.0 && n == 2000 && anomalies == 1000,
        format!("critic interval AUPRC {ap:.3} (>= 0.90) on {} normal + {anomalies} anomalies, {secs:.1}s", n - anomalies),
    ))
}

fn criterion_5() -> wgad::Result<Outcome> {
    let data = workspace_path("data/mnist-5k");
    if !data.exists() {
        return Ok(judge(
            false,
            format!("MNIST files not found at {}", data.display()),
        ));
    }
    let dir = tempfile::tempdir()?;
    let opts = RunOptions {
        out: Some(dir.path().to_path_buf()),
        ..RunOptions::with_config(recipe("mnist_leave_out_0.cfg"))
    };
    let start = Instant::now();
    cmd_train(&opts)?;
    let enc = cmd_train_encoder(&opts)?;
    let m = cmd_score(&opts)?;
    let secs = start.elapsed().as_secs_f64();
    let ap = m.metrics["auprc"].as_f64().unwrap_or(f64::NAN);
    let prevalence = m.metrics["prevalence"].as_f64().unwrap_or(f64::NAN);
    let normal_mse = enc
        .metrics
        .get("heldout_normal_mse")
        .and_then(|v| v.as_f64())
        .unwrap_or(f64::NAN);
    let abnormal_mse = enc
        .metrics
        .get("abnormal_mse")
        .and_then(|v| v.as_f64())
        .unwrap_or(f64::NAN);
    Ok(judge(
        ap >= 0.75 && ap >= 2.0 * prevalence && secs <= 5400.0,
        format!(
            "encoder-MSE AUPRC {ap:.3} (>= 0.75 and >= 2 x prevalence {prevalence:.3}), mean MSE normal {normal_mse:.4} vs digit 0 {abnormal_mse:.4}, {secs:.0}s"
        ),
    ))
}

fn criterion_6() -> wgad::Result<Outcome> {
    let root = workspace_path("data/UCI HAR Dataset");
    let dir = tempfile::tempdir()?;
    let opts = RunOptions {
        out: Some(dir.path().to_path_buf()),
        ..RunOptions::with_config(recipe("har_total_acc.cfg"))
    };
    let start = Instant::now();
    cmd_train(&opts)?;
    cmd_train_encoder(&opts)?;
    let m = cmd_score(&opts)?;
    let secs = start.elapsed().as_secs_f64();
    let ap = m.metrics["auprc"].as_f64().unwrap_or(f64::NAN);
    if !root.exists() {
        return Ok(Outcome {
            status: Status::Skip,
            detail: format!(
                "HAR data absent; recipe ran on the synthetic fixture (AUPRC {ap:.3}, {secs:.0}s)"
            ),
        });
    }
    Ok(judge(
        ap >= 0.60 && secs <= 3600.0,
        format!("laying abnormal, AUPRC {ap:.3} (>= 0.60), {secs:.0}s"),
    ))
}

fn brute_force(scores: &[f64], labels: &[u8]) -> Vec<PrPoint> {
    let mut ts = scores.to_vec();
    ts.sort_by(|a, b| b.total_cmp(a));
    ts.dedup();
    let pos = labels.iter().filter(|&&l| l == 1).count() as f64;
    ts.into_iter()
        .map(|t| {
            let (mut flagged, mut tp) = (0.0, 0.0);
            for (&s, &l) in scores.iter().zip(labels) {
                if s >= t {
                    flagged += 1.0;
                    tp += f64::from(l);
                }
            }
            PrPoint {
                threshold: t,
                precision: tp / flagged,
                recall: tp / pos,
            }
        })
        .collect()
}

fn criterion_7() -> wgad::Result<Outcome> {
    let mut rng = stream_rng(7, Stream::Evaluation);
    let mut mismatches = 0;
    for _ in 0..200 {
        let n = rng.random_range(2..=20);
        let scores: Vec<f64> = (0..n)
            .map(|_| f64::from(rng.random_range(0..8)) / 4.0)
            .collect();
        let mut labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
        labels[0] = 0;
        labels[1] = 1;
        if pr_curve(&scores, &labels)?.points != brute_force(&scores, &labels) {
            mismatches += 1;
        }
    }
    let n = 100_000;
    let scores: Vec<f64> = (0..n).map(|_| rng.random()).collect();
    let labels: Vec<u8> = (0..n)
        .map(|_| u8::from(rng.random::<f64>() < 0.2))
        .collect();
    let curve = pr_curve(&scores, &labels)?;
    let gap = (auprc(&curve) - curve.prevalence()).abs();
    Ok(judge(
        mismatches == 0 && gap <= 0.01,
        format!("{mismatches} of 200 curves differ from brute force; random scorer |AUPRC - prevalence| = {gap:.4}"),
    ))
}

fn criterion_8() -> wgad::Result<Outcome> {
    let col = |v: &[f64]| Tensor::matrix(v.len(), 1, v.to_vec());
    let cases: [(&[f64], &[f64], f64); 4] = [
        (&[1.0, 1.0], &[0.2, 0.4], 0.3),
        (&[-1.0, -1.0], &[0.2, 0.4], -0.3),
        (&[1.0, -1.0], &[1.0, 1.0], 0.0),
        (&[1.0, -1.0, 1.0, -1.0], &[0.5, -0.25, 2.0, 4.0], -0.3125),
    ];
    let mut exact = true;
    for (l, o, nominal) in cases {
        let got = wasserstein_loss(&col(l)?, &col(o)?)?;
        let definition = l.iter().zip(o).map(|(a, b)| a * b).sum::<f64>() / l.len() as f64;
        exact &= got == definition && (got - nominal).abs() < 1e-15;
    }

    let spec = wgad::data::GaussianMixtureSpec {
        seed: 8,
        ..Default::default()
    };
    let data = wgad::data::sample_gaussian_mixture(&spec, 2000)?;
    let mut config = GanConfig::new(Variant::WganClip);
    config.seed = 8;
    let mut t = GanTrainer::<f64>::new(
        config,
        NetworkSpec::toy_generator(2),
        NetworkSpec::toy_critic(),
        &data,
    )?;
    let mut worst = 0.0_f64;
    for update in 0..100 {
        if update % 6 == 5 {
            t.generator_step()?;
        } else {
            t.critic_step()?;
        }
        for p in t.critic.params.trainable().values() {
            worst = worst.max(p.data().iter().fold(0.0_f64, |a, v| a.max(v.abs())));
        }
    }
    Ok(judge(
        exact && worst <= 0.01,
        format!("mean-of-products exact on fixed vectors: {exact}; max |critic param| over 100 updates {worst:.5} (<= 0.01)"),
    ))
}

fn strip_wall(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

fn criterion_9(runs: &Option<ToyRuns>) -> wgad::Result<Outcome> {
    let dir = tempfile::tempdir()?;
    let first = match runs {
        Some(r) => r.seed_dirs[0].clone(),
        None => {
            let p = dir.path().join("a");
            cmd_train(&toy_options(1, &p, "toy_wgan_gp.cfg"))?;
            p
        }
    };
    let second = dir.path().join("b");
    cmd_train(&toy_options(1, &second, "toy_wgan_gp.cfg"))?;
    let same = |f: &str| -> wgad::Result<bool> {
        Ok(std::fs::read(first.join(f))? == std::fs::read(second.join(f))?)
    };
    let gen = same(GENERATOR_FILE)?;
    let critic = same(CRITIC_FILE)?;
    let log_a = std::fs::read_to_string(first.join(TRAINING_LOG_FILE))?;
    let log_b = std::fs::read_to_string(second.join(TRAINING_LOG_FILE))?;
    let log = strip_wall(&log_a) == strip_wall(&log_b);
    Ok(judge(
        gen && critic && log,
        format!("identical generator: {gen}, critic: {critic}, training log (timing column excluded): {log}"),
    ))
}

fn main() {
    let selected: Option<Vec<u32>> = std::env::var("WGAD_ACCEPTANCE")
        .ok()
        .map(|s| s.split(',').filter_map(|p| p.trim().parse().ok()).collect());
    let wanted = |n: u32| selected.as_ref().is_none_or(|s| s.contains(&n));
    let strict = std::env::var("WGAD_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");

    let mut toy_runs = None;
    let mut counts = [0usize; 3];
    for n in 1..=9u32 {
        if !wanted(n) {
            continue;
        }
        let start = Instant::now();
        let result = match n {
            1 => criterion_1(),
            2 => criterion_2(),
            3 => criterion_3(&mut toy_runs),
            4 => criterion_4(&toy_runs),
            5 => criterion_5(),
            6 => criterion_6(),
            7 => criterion_7(),
            8 => criterion_8(),
            _ => criterion_9(&toy_runs),
        };
        let outcome = result.unwrap_or_else(|e| Outcome {
            status: Status::Fail,
            detail: format!("error: {e}"),
        });
        let (tag, idx) = match outcome.status {
            Status::Pass => ("PASS", 0),
            Status::Fail => ("FAIL", 1),
            Status::Skip => ("SKIP", 2),
        };
        counts[idx] += 1;
        println!(
            "criterion {n}: {tag} - {} [{:.1}s]",
            outcome.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {} failed, {} skipped",
        counts[0], counts[1], counts[2]
    );
    if strict && counts[1] > 0 {
        std::process::exit(1);
    }
}
