//! Precision-recall analysis and score distribution summaries.

mod export;

pub use export::{boxplot_csv, pr_curve_csv, pr_curve_svg};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Name of the integration rule used by [`auprc`], recorded in outputs.
pub const AUPRC_RULE: &str = "average_precision_step";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrPoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// Operating points sorted by descending threshold; label 1 is positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub points: Vec<PrPoint>,
    pub positives: usize,
    pub negatives: usize,
}

impl PrCurve {
    pub fn prevalence(&self) -> f64 {
        self.positives as f64 / (self.positives + self.negatives) as f64
    }
}

fn check_inputs(scores: &[f64], labels: &[u8]) -> Result<()> {
    if scores.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite(format!("score of sample {i}")));
    }
    if labels.iter().any(|&l| l > 1) {
        return Err(Error::invalid("labels must be 0 or 1"));
    }
    Ok(())
}

/// One operating point per distinct score `t`, flagging `score >= t`.
pub fn pr_curve(scores: &[f64], labels: &[u8]) -> Result<PrCurve> {
    check_inputs(scores, labels)?;
    let positives = labels.iter().filter(|&&l| l == 1).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::SingleClass(format!(
            "{positives} anomalous and {negatives} normal samples"
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut points = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(PrPoint {
            threshold: t,
            precision: tp as f64 / (tp + fp) as f64,
            recall: tp as f64 / positives as f64,
        });
    }
    Ok(PrCurve {
        points,
        positives,
        negatives,
    })
}

/// `sum_i (r_i - r_{i-1}) * p_i` over ascending recall, starting from 0.
pub fn auprc(curve: &PrCurve) -> f64 {
    let mut prev = 0.0;
    let mut area = 0.0;
    for p in &curve.points {
        area += (p.recall - prev) * p.precision;
        prev = p.recall;
    }
    area
}

/// Convenience for `auprc(&pr_curve(scores, labels)?)`.
pub fn average_precision(scores: &[f64], labels: &[u8]) -> Result<f64> {
    Ok(auprc(&pr_curve(scores, labels)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxplotStats {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Linear-interpolation quantile at position `(n - 1) * q` of sorted data.
pub fn quantile_inclusive(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl BoxplotStats {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty("boxplot group".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("boxplot values".into()));
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Ok(Self {
            count: v.len(),
            min: v[0],
            q1: quantile_inclusive(&v, 0.25),
            median: quantile_inclusive(&v, 0.5),
            q3: quantile_inclusive(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

/// Summaries of the normal (label 0) and abnormal (label 1) groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupedBoxplot {
    pub normal: BoxplotStats,
    pub abnormal: BoxplotStats,
}

pub fn boxplot_stats(scores: &[f64], labels: &[u8]) -> Result<GroupedBoxplot> {
    check_inputs(scores, labels)?;
    let group = |l: u8| -> Vec<f64> {
        scores
            .iter()
            .zip(labels)
            .filter(|(_, &y)| y == l)
            .map(|(&s, _)| s)
            .collect()
    };
    Ok(GroupedBoxplot {
        normal: BoxplotStats::of(&group(0))?,
        abnormal: BoxplotStats::of(&group(1))?,
    })
}

#[cfg(test)]
mod tests;
