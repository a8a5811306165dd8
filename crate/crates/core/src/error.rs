//! Crate-wide error type.

use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unknown activity name {name:?} at {path}:{line}")]
    UnknownActivity {
        name: String,
        path: PathBuf,
        line: usize,
    },

    #[error("{malformed} of {total} lines malformed in {path} (over the 10% ingest limit)")]
    TooManyMalformed {
        malformed: usize,
        total: usize,
        path: PathBuf,
    },

    #[error("csv header does not match manifest: missing columns {missing:?}")]
    HeaderMismatch { missing: Vec<String> },

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("source digest mismatch for {path}: manifest {expected}, file {actual}")]
    DigestMismatch {
        path: PathBuf,
        expected: String,
        actual: String,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("class {class:?} has {count} segments; {strategy} needs at least {min}")]
    TooFewSegments {
        class: String,
        count: usize,
        min: usize,
        strategy: String,
    },

    #[error("channel {channel:?} is degenerate: min == max == {value}")]
    DegenerateChannel { channel: String, value: f64 },

    #[error("non-positive wavelet scale {0}")]
    NonPositiveScale(f64),

    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },

    #[error("backward requires a scalar loss, got shape {0:?}")]
    NonScalarLoss(Vec<usize>),

    #[error("backward already ran on this graph; rebuild the forward pass first")]
    BackwardTwice,

    #[error("label {label} out of range for {num_classes} classes")]
    LabelOutOfRange { label: usize, num_classes: usize },

    #[error("model kind {kind} does not support {what}")]
    Unsupported { kind: String, what: String },

    #[error("batch is missing the {0} representation")]
    MissingRepresentation(String),

    #[error("training set contains a single class; at least two are required")]
    SingleClass,

    #[error("NaN loss at epoch {epoch}, batch {batch} ({phase})")]
    NanLoss {
        epoch: usize,
        batch: usize,
        phase: String,
    },

    #[error("no usable anchors in contrastive batch: every item lacks a positive")]
    NoAnchors,

    #[error("infeasible batch mode {mode}: {why}")]
    InfeasibleSampler { mode: String, why: String },

    #[error("cache key mismatch: {0}")]
    CacheKey(String),

    #[error("bad file format in {path}: {why}")]
    BadFormat { path: PathBuf, why: String },

    #[error("empty selection: {0}")]
    EmptySelection(String),

    #[error("reports disagree on {field}: {left} vs {right}; refusing to merge")]
    ReportMergeConflict {
        field: String,
        left: String,
        right: String,
    },

    #[error("all {0} models failed")]
    AllModelsFailed(usize),

    #[error("{0}")]
    Other(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
