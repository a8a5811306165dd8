//! Config-driven experiment runner: full pipeline per model, accuracy
//! tables, confusion matrices and feature dumps.

mod config;
mod confusion;
mod dump;
pub mod provenance;
mod report;
mod runner;
mod table;

pub use config::{DatasetConfig, DatasetKind, ExperimentConfig, SplitConfig};
pub use confusion::{accuracy_from_confusion, confusion_matrix, write_confusion_csv};
pub use dump::{dump_features, SegmentSelector};
pub use report::{
    load_report, normalize_for_comparison, save_report, ExperimentReport, ModelOutcome,
    ModelReport,
};
pub use runner::{evaluate_checkpoint, load_corpus, preprocess_to_dir, run_experiment, RunOverrides};
pub use table::{emit_table, paper_reference, render_csv, render_text, Table};
