//! Generic multi-channel CSV ingestion (the DS2-style carrier).
//!
//! Expected header: `user,activity,<channel...>` with channel columns
//! matching the manifest by name; one sample per row, UTF-8.

use super::manifest::DatasetManifest;
use super::types::{Ingest, IngestStats, RawRecording};
use crate::error::{Error, Result};
use crate::mat::Mat;
use std::path::Path;

struct Row {
    user: i64,
    class: usize,
    values: Vec<f64>,
}

/// Loads a generic CSV corpus with the same run-splitting contract as the
/// WISDM loader (runs break on user or activity change; the format carries
/// no timestamps, so row order stands in for time).
pub fn load_generic_csv(path: &Path, manifest: &DatasetManifest) -> Result<Ingest> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    manifest.verify_source_digest(path, &bytes)?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(bytes.as_slice());
    let headers = reader
        .headers()
        .map_err(|e| Error::Manifest(format!("{path:?}: {e}")))?
        .clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim().eq_ignore_ascii_case(name))
    };
    let mut missing: Vec<String> = Vec::new();
    let user_col = col("user");
    let activity_col = col("activity");
    if user_col.is_none() {
        missing.push("user".into());
    }
    if activity_col.is_none() {
        missing.push("activity".into());
    }
    let mut channel_cols = Vec::with_capacity(manifest.channel_names.len());
    for ch in &manifest.channel_names {
        match col(ch) {
            Some(i) => channel_cols.push(i),
            None => missing.push(ch.clone()),
        }
    }
    if !missing.is_empty() {
        return Err(Error::HeaderMismatch { missing });
    }
    let (user_col, activity_col) = (user_col.unwrap(), activity_col.unwrap());

    let mut stats = IngestStats::default();
    let mut rows: Vec<Row> = Vec::new();
    for (recno, record) in reader.records().enumerate() {
        let record = match record {
            Ok(r) => r,
            Err(_) => {
                stats.total_lines += 1;
                stats.malformed_lines += 1;
                continue;
            }
        };
        stats.total_lines += 1;
        match parse_record(&record, user_col, activity_col, &channel_cols, manifest) {
            Ok(Some(row)) => rows.push(row),
            Ok(None) => stats.malformed_lines += 1,
            Err(name) => {
                return Err(Error::UnknownActivity {
                    name,
                    path: path.to_path_buf(),
                    line: recno + 2, // header is line 1
                })
            }
        }
    }
    if stats.total_lines > 0 && stats.malformed_lines * 10 > stats.total_lines {
        return Err(Error::TooManyMalformed {
            malformed: stats.malformed_lines,
            total: stats.total_lines,
            path: path.to_path_buf(),
        });
    }

    let c = manifest.channel_names.len();
    let mut recordings = Vec::new();
    let mut start = 0usize;
    for i in 1..=rows.len() {
        let boundary = i == rows.len()
            || rows[i - 1].user != rows[i].user
            || rows[i - 1].class != rows[i].class;
        if boundary {
            let run = &rows[start..i];
            let data: Vec<f64> = run.iter().flat_map(|r| r.values.iter().copied()).collect();
            recordings.push(RawRecording {
                user_id: run[0].user,
                activity: manifest.label(run[0].class),
                channels: Mat::from_vec(run.len(), c, data),
                channel_names: manifest.channel_names.clone(),
                start_timestamp: start as i64,
            });
            start = i;
        }
    }
    recordings.sort_by(|a, b| (a.user_id, a.start_timestamp).cmp(&(b.user_id, b.start_timestamp)));
    stats.recordings = recordings.len();
    Ok(Ingest { recordings, stats })
}

fn parse_record(
    record: &csv::StringRecord,
    user_col: usize,
    activity_col: usize,
    channel_cols: &[usize],
    manifest: &DatasetManifest,
) -> std::result::Result<Option<Row>, String> {
    let user = match record.get(user_col).and_then(|f| f.trim().parse::<i64>().ok()) {
        Some(u) => u,
        None => return Ok(None),
    };
    let mut values = Vec::with_capacity(channel_cols.len());
    for &ci in channel_cols {
        match record.get(ci).and_then(|f| f.trim().parse::<f64>().ok()) {
            Some(v) if v.is_finite() => values.push(v),
            _ => return Ok(None),
        }
    }
    let activity = match record.get(activity_col) {
        Some(a) => a,
        None => return Ok(None),
    };
    match manifest.class_index(activity) {
        Some(class) => Ok(Some(Row {
            user,
            class,
            values,
        })),
        None => Err(activity.trim().to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest6() -> DatasetManifest {
        DatasetManifest {
            name: "generic-6ch".into(),
            num_classes: 6,
            class_names: (0..6).map(|i| format!("class_{i}")).collect(),
            channel_names: vec![
                "acc_x".into(),
                "acc_y".into(),
                "acc_z".into(),
                "gyr_x".into(),
                "gyr_y".into(),
                "gyr_z".into(),
            ],
            sampling_note: String::new(),
            source_files: vec![],
        }
    }

    fn write(content: &str) -> (tempfile::TempDir, std::path::PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("corpus.csv");
        std::fs::write(&path, content).unwrap();
        (dir, path)
    }

    const HEADER: &str = "user,activity,acc_x,acc_y,acc_z,gyr_x,gyr_y,gyr_z";

    #[test]
    fn two_users_two_activities_gives_four_recordings() {
        let mut lines = vec![HEADER.to_string()];
        for (user, class) in [(1, "class_0"), (1, "class_1"), (2, "class_0"), (2, "class_1")] {
            for t in 0..5 {
                lines.push(format!("{user},{class},{t}.0,0.1,0.2,0.3,0.4,0.5"));
            }
        }
        let (_d, path) = write(&lines.join("\n"));
        let ingest = load_generic_csv(&path, &manifest6()).unwrap();
        assert_eq!(ingest.recordings.len(), 4);
        assert!(ingest.recordings.iter().all(|r| r.len() == 5));
        assert!(ingest.recordings.iter().all(|r| r.num_channels() == 6));
    }

    #[test]
    fn header_only_file_is_empty() {
        let (_d, path) = write(HEADER);
        let ingest = load_generic_csv(&path, &manifest6()).unwrap();
        assert!(ingest.recordings.is_empty());
        assert_eq!(ingest.stats.total_lines, 0);
    }

    #[test]
    fn missing_channels_named_in_error() {
        let (_d, path) = write("user,activity,acc_x,acc_y,acc_z\n1,class_0,0,0,0");
        match load_generic_csv(&path, &manifest6()) {
            Err(Error::HeaderMismatch { missing }) => {
                assert_eq!(missing, vec!["gyr_x", "gyr_y", "gyr_z"]);
            }
            other => panic!("expected HeaderMismatch, got {other:?}"),
        }
    }

    #[test]
    fn malformed_rows_are_tallied() {
        let content = format!(
            "{HEADER}\n1,class_0,0,0,0,0,0,0\n1,class_0,bad,0,0,0,0,0\n\
             1,class_0,0,0,0,0,0,0\n1,class_0,1,1,1,1,1,1\n1,class_0,2,2,2,2,2,2\n\
             1,class_0,3,3,3,3,3,3\n1,class_0,4,4,4,4,4,4\n1,class_0,5,5,5,5,5,5\n\
             1,class_0,6,6,6,6,6,6\n1,class_0,7,7,7,7,7,7\n1,class_0,8,8,8,8,8,8"
        );
        let (_d, path) = write(&content);
        let ingest = load_generic_csv(&path, &manifest6()).unwrap();
        assert_eq!(ingest.stats.malformed_lines, 1);
        assert_eq!(ingest.recordings.len(), 1);
        assert_eq!(ingest.recordings[0].len(), 10);
    }
}
