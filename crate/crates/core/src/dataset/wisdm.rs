//! WISDM v1.1 raw-file ingestion.
//!
//! Line format: `user,activity,timestamp,x,y,z;` — trailing semicolons (and
//! stray trailing commas) are tolerated, scientific notation accepted.
//! Malformed lines are dropped and tallied; more than 10% malformed aborts
//! the load.

use super::manifest::DatasetManifest;
use super::types::{Ingest, IngestStats, RawRecording};
use crate::error::{Error, Result};
use crate::mat::Mat;
use std::path::Path;

/// Multiple of the median sampling interval beyond which a timestamp gap
/// starts a new recording, so windows never span collection pauses.
const GAP_FACTOR: f64 = 10.0;

struct Row {
    user: i64,
    class: usize,
    ts: i64,
    xyz: [f64; 3],
}

/// Loads a WISDM v1.1 raw stream into one recording per maximal contiguous
/// (user, activity) run, additionally split at large timestamp gaps.
pub fn load_wisdm(path: &Path, manifest: &DatasetManifest) -> Result<Ingest> {
    if manifest.channel_names.len() != 3 {
        return Err(Error::Manifest(format!(
            "WISDM carries 3 accelerometer channels, manifest lists {}",
            manifest.channel_names.len()
        )));
    }
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    manifest.verify_source_digest(path, &bytes)?;
    let text = String::from_utf8_lossy(&bytes);

    let mut stats = IngestStats::default();
    let mut rows: Vec<Row> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        stats.total_lines += 1;
        match parse_line(line, manifest) {
            Ok(Some(row)) => rows.push(row),
            Ok(None) => stats.malformed_lines += 1,
            Err(name) => {
                return Err(Error::UnknownActivity {
                    name,
                    path: path.to_path_buf(),
                    line: lineno + 1,
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

    let gap_limit = median_interval(&rows).map(|m| m * GAP_FACTOR);
    let mut recordings = split_runs(&rows, manifest, gap_limit);
    recordings.sort_by(|a, b| (a.user_id, a.start_timestamp).cmp(&(b.user_id, b.start_timestamp)));
    stats.recordings = recordings.len();
    Ok(Ingest { recordings, stats })
}

/// `Ok(Some)` = good row, `Ok(None)` = malformed, `Err` = unknown activity
/// on an otherwise well-formed row.
fn parse_line(line: &str, manifest: &DatasetManifest) -> std::result::Result<Option<Row>, String> {
    let trimmed = line.trim_end_matches(|c: char| c == ';' || c == ',' || c.is_whitespace());
    let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
    if fields.len() != 6 {
        return Ok(None);
    }
    let user = match fields[0].parse::<i64>() {
        Ok(u) => u,
        Err(_) => return Ok(None),
    };
    let ts = match fields[2].parse::<i64>() {
        Ok(t) => t,
        Err(_) => match fields[2].parse::<f64>() {
            Ok(f) if f.is_finite() => f as i64,
            _ => return Ok(None),
        },
    };
    let mut xyz = [0.0f64; 3];
    for (i, slot) in xyz.iter_mut().enumerate() {
        match fields[3 + i].parse::<f64>() {
            Ok(v) if v.is_finite() => *slot = v,
            _ => return Ok(None),
        }
    }
    match manifest.class_index(fields[1]) {
        Some(class) => Ok(Some(Row {
            user,
            class,
            ts,
            xyz,
        })),
        None => Err(fields[1].to_string()),
    }
}

/// Median positive timestamp delta between consecutive same-run rows.
fn median_interval(rows: &[Row]) -> Option<f64> {
    let mut deltas: Vec<i64> = rows
        .windows(2)
        .filter(|w| w[0].user == w[1].user && w[0].class == w[1].class)
        .map(|w| w[1].ts - w[0].ts)
        .filter(|d| *d > 0)
        .collect();
    if deltas.is_empty() {
        return None;
    }
    deltas.sort_unstable();
    Some(deltas[deltas.len() / 2] as f64)
}

fn split_runs(rows: &[Row], manifest: &DatasetManifest, gap_limit: Option<f64>) -> Vec<RawRecording> {
    let mut out = Vec::new();
    let mut start = 0usize;
    for i in 1..=rows.len() {
        let boundary = i == rows.len() || {
            let (prev, cur) = (&rows[i - 1], &rows[i]);
            prev.user != cur.user
                || prev.class != cur.class
                || gap_limit.is_some_and(|g| (cur.ts - prev.ts) as f64 > g)
        };
        if boundary {
            let run = &rows[start..i];
            let data: Vec<f64> = run.iter().flat_map(|r| r.xyz).collect();
            out.push(RawRecording {
                user_id: run[0].user,
                activity: manifest.label(run[0].class),
                channels: Mat::from_vec(run.len(), 3, data),
                channel_names: manifest.channel_names.clone(),
                start_timestamp: run[0].ts,
            });
            start = i;
        }
    }
    out
}
