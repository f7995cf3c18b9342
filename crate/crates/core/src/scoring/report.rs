use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil::write_atomic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scorer {
    Critic,
    Anogan,
    BiganStyle,
    EncoderMse,
}

impl Scorer {
    pub const ALL: [Scorer; 4] = [
        Scorer::Critic,
        Scorer::Anogan,
        Scorer::BiganStyle,
        Scorer::EncoderMse,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scorer::Critic => "critic",
            Scorer::Anogan => "anogan",
            Scorer::BiganStyle => "bigan_style",
            Scorer::EncoderMse => "encoder_mse",
        }
    }
}

impl fmt::Display for Scorer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scorer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scorer::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown scorer `{s}`")))
    }
}

/// One CSV line of a score report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub sample_id: usize,
    pub score: f64,
    pub label: u8,
    pub scorer: String,
    pub model: String,
}

/// Scores for one scorer and model over a labelled test set.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub scores: Vec<f64>,
    pub labels: Vec<u8>,
    pub scorer: Scorer,
    pub model: String,
}

impl ScoreReport {
    pub fn new(
        scores: Vec<f64>,
        labels: Vec<u8>,
        scorer: Scorer,
        model: impl Into<String>,
    ) -> Result<Self> {
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
        if let Some(i) = labels.iter().position(|&l| l > 1) {
            return Err(Error::invalid(format!(
                "label {} of sample {i} is not 0 or 1",
                labels[i]
            )));
        }
        Ok(Self {
            scores,
            labels,
            scorer,
            model: model.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = ScoreRow> + '_ {
        self.scores
            .iter()
            .zip(&self.labels)
            .enumerate()
            .map(|(i, (&score, &label))| ScoreRow {
                sample_id: i,
                score,
                label,
                scorer: self.scorer.name().into(),
                model: self.model.clone(),
            })
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in self.rows() {
            w.serialize(row)
                .map_err(|e| Error::invalid(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_csv()?.as_bytes())
    }

    /// Parses one or more reports; rows are grouped by `(scorer, model)` in
    /// order of first appearance and sorted by `sample_id`.
    pub fn parse_csv(text: &str) -> Result<Vec<ScoreReport>> {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let mut groups: Vec<((String, String), Vec<ScoreRow>)> = Vec::new();
        for rec in rdr.deserialize::<ScoreRow>() {
            let row = rec.map_err(|e| Error::Format {
                what: "score report",
                detail: e.to_string(),
            })?;
            let key = (row.scorer.clone(), row.model.clone());
            match groups.iter_mut().find(|(k, _)| *k == key) {
                Some((_, rows)) => rows.push(row),
                None => groups.push((key, vec![row])),
            }
        }
        groups
            .into_iter()
            .map(|((scorer, model), mut rows)| {
                rows.sort_by_key(|r| r.sample_id);
                if rows.iter().enumerate().any(|(i, r)| r.sample_id != i) {
                    return Err(Error::Format {
                        what: "score report",
                        detail: format!("sample ids of {scorer}/{model} are not 0..n"),
                    });
                }
                ScoreReport::new(
                    rows.iter().map(|r| r.score).collect(),
                    rows.iter().map(|r| r.label).collect(),
                    scorer.parse()?,
                    model,
                )
            })
            .collect()
    }

    pub fn read_csv(path: &Path) -> Result<Vec<ScoreReport>> {
        if !path.exists() {
            return Err(Error::MissingData(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path)?;
        Self::parse_csv(&text)
    }
}
