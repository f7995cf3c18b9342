use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;
use crate::tensor::Tensor;

/// One optimizer update. Critic rows carry `critic_loss` (and `penalty`
/// for the penalty variant); generator rows carry `gen_loss`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub update_index: usize,
    pub epoch: usize,
    pub critic_loss: Option<f64>,
    pub penalty: Option<f64>,
    pub gen_loss: Option<f64>,
    pub wall_ms: f64,
}

impl LogRow {
    pub fn is_critic(&self) -> bool {
        self.critic_loss.is_some()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub rows: Vec<LogRow>,
    /// `(epoch, samples)` taken after each epoch when requested.
    pub snapshots: Vec<(usize, Tensor)>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl TrainingLog {
    pub fn critic_updates(&self) -> usize {
        self.rows.iter().filter(|r| r.is_critic()).count()
    }

    pub fn generator_updates(&self) -> usize {
        self.rows.iter().filter(|r| r.gen_loss.is_some()).count()
    }

    pub fn critic_losses(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.critic_loss).collect()
    }

    pub fn penalties(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.penalty).collect()
    }

    pub fn generator_losses(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.gen_loss).collect()
    }

    /// Mean critic loss of each epoch.
    pub fn epoch_critic_means(&self) -> Vec<f64> {
        let last = self.rows.iter().map(|r| r.epoch).max().map_or(0, |e| e + 1);
        (0..last)
            .map(|e| {
                let v: Vec<f64> = self
                    .rows
                    .iter()
                    .filter(|r| r.epoch == e)
                    .filter_map(|r| r.critic_loss)
                    .collect();
                v.iter().sum::<f64>() / v.len().max(1) as f64
            })
            .collect()
    }

    /// CSV text; `with_wall` false blanks the timing column so two runs can
    /// be compared byte for byte.
    pub fn to_csv(&self, with_wall: bool) -> String {
        let mut out = String::from("update_index,epoch,critic_loss,penalty,gen_loss,wall_ms\n");
        for r in &self.rows {
            let wall = if with_wall {
                format!("{:.3}", r.wall_ms)
            } else {
                String::new()
            };
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.update_index,
                r.epoch,
                opt(r.critic_loss),
                opt(r.penalty),
                opt(r.gen_loss),
                wall
            )
            .expect("write to string");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        crate::fsutil::write_atomic(path, self.to_csv(true).as_bytes())
    }
}
