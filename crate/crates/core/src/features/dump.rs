//! Plot-ready CSV dumps of temporal and spectral features.
//!
//! Temporal: S rows × C named channel columns. Spectral: one row per
//! (scale, time, channel) with columns `scale,time,channel,value`.

use super::extract::Spectral;
use crate::error::{Error, Result};
use crate::mat::Mat;
use std::fmt::Write as _;
use std::path::Path;

pub fn dump_temporal_csv(path: &Path, temporal: &Mat, channel_names: &[String]) -> Result<()> {
    assert_eq!(
        channel_names.len(),
        temporal.cols(),
        "channel name count mismatch"
    );
    let mut out = String::new();
    out.push_str(&channel_names.join(","));
    out.push('\n');
    for r in 0..temporal.rows() {
        let row = temporal.row(r);
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:.17e}");
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn dump_spectral_csv(path: &Path, spectral: &Spectral) -> Result<()> {
    let mut out = String::from("scale,time,channel,value\n");
    for k in 0..spectral.scales {
        for t in 0..spectral.steps {
            for c in 0..spectral.channels {
                let _ = writeln!(out, "{},{},{},{:.17e}", k + 1, t, c, spectral.get(k, t, c));
            }
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

pub fn read_temporal_csv(path: &Path) -> Result<(Vec<String>, Mat)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::BadFormat {
        path: path.to_path_buf(),
        why: "empty temporal dump".into(),
    })?;
    let names: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut data = Vec::new();
    let mut rows = 0;
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        for field in line.split(',') {
            data.push(field.parse::<f64>().map_err(|_| Error::BadFormat {
                path: path.to_path_buf(),
                why: format!("bad float {field:?}"),
            })?);
        }
        rows += 1;
    }
    Ok((names.clone(), Mat::from_vec(rows, names.len(), data)))
}

pub fn read_spectral_csv(path: &Path) -> Result<Spectral> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |why: String| Error::BadFormat {
        path: path.to_path_buf(),
        why,
    };
    let mut entries: Vec<(usize, usize, usize, f64)> = Vec::new();
    let (mut kmax, mut tmax, mut cmax) = (0usize, 0usize, 0usize);
    for (i, line) in text.lines().enumerate() {
        if i == 0 || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad(format!("line {} has {} fields", i + 1, fields.len())));
        }
        let k: usize = fields[0].parse().map_err(|_| bad("bad scale".into()))?;
        let t: usize = fields[1].parse().map_err(|_| bad("bad time".into()))?;
        let c: usize = fields[2].parse().map_err(|_| bad("bad channel".into()))?;
        let v: f64 = fields[3].parse().map_err(|_| bad("bad value".into()))?;
        kmax = kmax.max(k);
        tmax = tmax.max(t + 1);
        cmax = cmax.max(c + 1);
        entries.push((k, t, c, v));
    }
    let mut sp = Spectral {
        scales: kmax,
        steps: tmax,
        channels: cmax,
        data: vec![0.0; kmax * tmax * cmax],
    };
    for (k, t, c, v) in entries {
        sp.data[((k - 1) * sp.steps + t) * sp.channels + c] = v;
    }
    Ok(sp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn temporal_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("temporal.csv");
        let m = Mat::from_vec(3, 2, vec![0.1, -2.0, 3.5e-7, 4.0, 5.25, 1.0 / 3.0]);
        dump_temporal_csv(&path, &m, &["acc_x".into(), "acc_y".into()]).unwrap();
        let (names, back) = read_temporal_csv(&path).unwrap();
        assert_eq!(names, vec!["acc_x", "acc_y"]);
        assert_eq!(back.data(), m.data());
    }

    #[test]
    fn spectral_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("spectral.csv");
        let sp = Spectral {
            scales: 2,
            steps: 3,
            channels: 2,
            data: (0..12).map(|v| v as f64 / 7.0).collect(),
        };
        dump_spectral_csv(&path, &sp).unwrap();
        let back = read_spectral_csv(&path).unwrap();
        assert_eq!(back, sp);
    }
}
