use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one finished command, written last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub config_path: Option<PathBuf>,
    /// Config file text exactly as read.
    pub config: Option<String>,
    pub seed: Option<u64>,
    pub precision: Option<String>,
    pub dataset: Option<String>,
    pub checkpoints: BTreeMap<String, PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub metrics: BTreeMap<String, Value>,
    pub timings_ms: BTreeMap<String, f64>,
    pub finished_unix_s: u64,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            config_path: None,
            config: None,
            seed: None,
            precision: None,
            dataset: None,
            checkpoints: BTreeMap::new(),
            outputs: Vec::new(),
            metrics: BTreeMap::new(),
            timings_ms: BTreeMap::new(),
            finished_unix_s: 0,
        }
    }

    pub fn metric(&mut self, key: &str, value: impl Into<Value>) {
        self.metrics.insert(key.into(), value.into());
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    /// Stamps the finish time and writes `manifest.json` into `dir`.
    pub fn write(&mut self, dir: &Path) -> Result<PathBuf> {
        self.finished_unix_s = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::invalid(e.to_string()))?;
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingData(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::format("run manifest", e.to_string()))
    }
}
