//! Presentation-attack evaluation (ISO/IEC 30107-3 conventions).
//!
//! Scores live on a 0–100 scale where higher means bona fide; a sample is
//! called bona fide when `score >= threshold` (operational threshold 50).

mod curve;
mod report;
mod stats;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imageio::Label;

pub use curve::{apcer_bpcer, auroc, bpcer_at_apcer, decidability, det_curve, DetCurve, DetPoint, OperatingPoint};
pub use report::{evaluate, render_table, write_det_csv, EvalReport, ExperimentId, VariantColumn};
pub use stats::{aggregate_runs, paired_t_test, MeanStd, RunAggregate, TTest};

/// The four APCER operating points reported in the result table.
pub const APCER_TARGETS: [f64; 4] = [0.001, 0.01, 0.05, 0.10];

/// Operational decision threshold on the score scale.
pub const DECISION_THRESHOLD: f64 = 50.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub sample_id: String,
    pub label: Label,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoreSet {
    pub records: Vec<ScoreRecord>,
}

impl ScoreSet {
    /// Builds a score set, rejecting scores outside `[0, 100]` or NaN.
    pub fn new(records: Vec<ScoreRecord>) -> Result<Self> {
        if let Some(r) = records.iter().find(|r| !(0.0..=100.0).contains(&r.score)) {
            return Err(Error::InvariantViolation(format!(
                "score {} of `{}` is outside [0, 100]",
                r.score, r.sample_id
            )));
        }
        Ok(Self { records })
    }

    /// Convenience constructor used heavily in tests: ids are generated.
    pub fn from_scores(bf: &[f64], pa: &[f64]) -> Result<Self> {
        let recs = bf
            .iter()
            .map(|&s| (Label::BF, s))
            .chain(pa.iter().map(|&s| (Label::PA, s)))
            .enumerate()
            .map(|(i, (label, score))| ScoreRecord {
                sample_id: format!("s{i}"),
                label,
                score,
            })
            .collect();
        Self::new(recs)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn scores(&self, label: Label) -> Vec<f64> {
        self.records.iter().filter(|r| r.label == label).map(|r| r.score).collect()
    }

    pub fn count(&self, label: Label) -> usize {
        self.records.iter().filter(|r| r.label == label).count()
    }

    /// Concatenation of several sets (pooled evaluation).
    pub fn pooled<'a>(sets: impl IntoIterator<Item = &'a ScoreSet>) -> ScoreSet {
        ScoreSet {
            records: sets.into_iter().flat_map(|s| s.records.iter().cloned()).collect(),
        }
    }

    pub(crate) fn require_both(&self) -> Result<()> {
        let (bf, pa) = (self.count(Label::BF), self.count(Label::PA));
        if bf == 0 || pa == 0 {
            return Err(Error::InsufficientData(format!(
                "score set needs both labels (BF {bf}, PA {pa})"
            )));
        }
        Ok(())
    }

    /// Writes `sample_id,label,score`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let err = |e: csv::Error| csv_error(path, e);
        let mut w = csv::Writer::from_path(path).map_err(err)?;
        for r in &self.records {
            w.serialize(r).map_err(err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Reads a score CSV, e.g. one exported by a third-party PAD model.
    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
        let headers = r.headers().map_err(|e| csv_error(path, e))?;
        if headers != vec!["sample_id", "label", "score"] {
            return Err(Error::Format {
                kind: "score",
                path: path.to_path_buf(),
                message: format!("unexpected header {headers:?}"),
            });
        }
        let records = r
            .deserialize()
            .collect::<std::result::Result<Vec<ScoreRecord>, _>>()
            .map_err(|e| csv_error(path, e))?;
        Self::new(records)
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::Format {
        kind: "score",
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}
