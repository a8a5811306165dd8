//! Corpus ingestion, synthetic data generation and train/val/test splits.

mod generic;
mod manifest;
mod split;
mod synth;
mod types;
mod wisdm;

pub use generic::load_generic_csv;
pub use manifest::{DatasetManifest, SourceFile};
pub use split::{stratified_split, SplitAssignment, SplitItem, SplitStrategy, DEFAULT_RATIOS};
pub use synth::{synth_generate, SynthSpec};
pub use types::{ActivityLabel, Ingest, IngestStats, RawRecording};
pub use wisdm::load_wisdm;
