//! Experiment reports: per-model results plus full provenance, persisted
//! as JSON.

use super::provenance::DecisionRecord;
use crate::dataset::{DatasetManifest, SplitStrategy};
use crate::error::{Error, Result};
use crate::models::ModelKind;
use crate::training::{EpochRecord, Schedule};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ModelOutcome {
    Ok,
    Failed { error: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReport {
    pub kind: ModelKind,
    pub schedule: Schedule,
    pub outcome: ModelOutcome,
    /// Test accuracy in [0,1]; absent on failure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test_accuracy: Option<f64>,
    /// `[true][predicted]` counts over the test split.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub confusion: Option<Vec<Vec<u64>>>,
    /// Wall-clock seconds spent fitting / training (timing field, zeroed
    /// by [`normalize_for_comparison`]).
    pub fit_seconds: f64,
    /// Wall-clock seconds spent on the single test evaluation.
    pub eval_seconds: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_val_accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub best_epoch: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<EpochRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub history_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint_path: Option<String>,
    pub trainable_parameters: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub strategy: SplitStrategy,
    pub seed: u64,
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub recordings: usize,
    pub segments: usize,
    pub malformed_lines: usize,
    /// Published segment-count reference for the primary corpus, kept next
    /// to our own count rather than forced to match.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_record_count: Option<usize>,
}

/// Everything one run produced, with provenance for exact reruns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub tool_version: String,
    /// Timestamp field (normalized away for comparisons).
    pub started_at: String,
    pub config_digest: String,
    /// Digest of the table-compatibility fields (corpus + preprocess +
    /// features + split).
    pub table_digest: String,
    pub corpus_digest: String,
    pub seed: u64,
    pub manifest: DatasetManifest,
    pub corpus: CorpusSummary,
    pub split: SplitSummary,
    pub decisions: Vec<DecisionRecord>,
    pub models: Vec<ModelReport>,
}

impl ExperimentReport {
    pub fn model(&self, kind: ModelKind) -> Option<&ModelReport> {
        self.models.iter().find(|m| m.kind == kind)
    }
}

pub fn save_report(path: &Path, report: &ExperimentReport) -> Result<()> {
    let json =
        serde_json::to_string_pretty(report).map_err(|e| Error::Other(e.to_string()))?;
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_report(path: &Path) -> Result<ExperimentReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::BadFormat {
        path: path.to_path_buf(),
        why: e.to_string(),
    })
}

/// Zeroes the wall-clock fields so two runs of the same seeded experiment
/// compare byte-identically.
pub fn normalize_for_comparison(report: &mut ExperimentReport) {
    report.started_at = String::new();
    for m in &mut report.models {
        m.fit_seconds = 0.0;
        m.eval_seconds = 0.0;
    }
}
