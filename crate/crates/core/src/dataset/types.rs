//! Core dataset value types.

use crate::mat::Mat;
use serde::{Deserialize, Serialize};

/// A labeled activity class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityLabel {
    pub class_index: usize,
    pub class_name: String,
}

/// One user's contiguous labeled multi-channel sensor stream.
///
/// Rows are time steps at the native sampling rate; columns are sensor axes.
#[derive(Debug, Clone)]
pub struct RawRecording {
    pub user_id: i64,
    pub activity: ActivityLabel,
    /// `[L × C]`, all entries finite after ingestion.
    pub channels: Mat,
    pub channel_names: Vec<String>,
    /// First timestamp of the run (file row index when the source has no
    /// timestamps). Used only for deterministic ordering.
    pub start_timestamp: i64,
}

impl RawRecording {
    pub fn len(&self) -> usize {
        self.channels.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.rows() == 0
    }

    pub fn num_channels(&self) -> usize {
        self.channels.cols()
    }
}

/// Ingest bookkeeping: every skipped line is tallied.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestStats {
    /// Non-empty lines seen (data rows for csv sources).
    pub total_lines: usize,
    /// Lines dropped because they failed to parse.
    pub malformed_lines: usize,
    pub recordings: usize,
}

/// Result of loading one corpus file.
#[derive(Debug, Clone)]
pub struct Ingest {
    pub recordings: Vec<RawRecording>,
    pub stats: IngestStats,
}
