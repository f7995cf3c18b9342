//! Config-driven commands behind the `wgad` binary.
//!
//! Exit codes: 0 success, 1 unexpected failure, 2 invalid configuration,
//! 3 data error, 4 training divergence, 5 checkpoint checksum mismatch.

mod commands;
mod config;
mod dataset;
mod manifest;

pub use commands::{
    cmd_eval, cmd_gen_toy, cmd_invert, cmd_score, cmd_train, cmd_train_encoder, RunOptions,
    BOXPLOT_FILE, COVERAGE_SAMPLES, CRITIC_FILE, ENCODER_FILE, ENCODER_LOG_FILE, GENERATOR_FILE,
    LATENTS_FILE, METRICS_FILE, PR_SVG_FILE, SCORES_FILE, SNAPSHOT_FILE, THRESHOLD_FILE,
    TOY_DATA_FILE, TRAINING_LOG_FILE,
};
pub use config::{
    config_keys, ConfigDoc, DatasetKind, DatasetSection, EncoderSection, ExperimentConfig,
    ModelSection, Precision, ScorerSection,
};
pub use dataset::{load_splits, Splits};
pub use manifest::{RunManifest, MANIFEST_FILE};

use crate::error::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_DIVERGED: i32 = 4;
pub const EXIT_CHECKSUM: i32 = 5;

/// Environment variable capping the worker threads used for scoring.
pub const THREADS_ENV: &str = "WGAD_THREADS";

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) | Error::Shape(_) => EXIT_CONFIG,
        Error::MissingData(_) | Error::Format { .. } | Error::Empty(_) | Error::SingleClass(_) => {
            EXIT_DATA
        }
        Error::Diverged { .. } | Error::NonFiniteLoss { .. } | Error::NonFinite(_) => EXIT_DIVERGED,
        Error::Checksum { .. } => EXIT_CHECKSUM,
        _ => EXIT_FAILURE,
    }
}

/// Sizes the global rayon pool from `WGAD_THREADS` when it is set.
pub fn configure_threads() -> Result<Option<usize>, Error> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            Error::Config(format!(
                "{THREADS_ENV} must be a positive integer, got `{value}`"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("cannot size thread pool: {e}")))?;
    Ok(Some(n))
}

#[cfg(test)]
mod tests;
