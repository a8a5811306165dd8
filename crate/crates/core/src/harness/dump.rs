//! Feature dumps for re-plotting: temporal and spectral CSVs per segment.

use super::config::ExperimentConfig;
use super::runner::prepare;
use crate::error::{Error, Result};
use crate::features::{dump_spectral_csv, dump_temporal_csv, extract_bundle};
use crate::preprocess::Segment;
use std::path::{Path, PathBuf};

/// Which segment(s) to dump.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SegmentSelector {
    ById(u64),
    /// First segment of the class (canonical name match).
    ByClass(String),
}

/// Runs the pipeline, resolves the selector and writes one temporal and
/// one spectral CSV. Returns the written paths.
pub fn dump_features(
    config: &ExperimentConfig,
    selector: &SegmentSelector,
    out_dir: &Path,
) -> Result<(PathBuf, PathBuf)> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let prepared = prepare(config)?;
    let segment: &Segment = match selector {
        SegmentSelector::ById(id) => prepared
            .segments
            .iter()
            .find(|s| s.id == *id)
            .ok_or_else(|| Error::EmptySelection(format!("no segment with id {id}")))?,
        SegmentSelector::ByClass(name) => {
            let needle = name.trim().to_lowercase();
            prepared
                .segments
                .iter()
                .find(|s| s.label.class_name.to_lowercase() == needle)
                .ok_or_else(|| {
                    Error::EmptySelection(format!("no segment with class {name:?}"))
                })?
        }
    };
    let bundle = extract_bundle(segment, &config.features)?;
    let temporal_path = out_dir.join(format!("segment_{}_temporal.csv", segment.id));
    let spectral_path = out_dir.join(format!("segment_{}_spectral.csv", segment.id));
    dump_temporal_csv(&temporal_path, &bundle.temporal, &prepared.manifest.channel_names)?;
    dump_spectral_csv(&spectral_path, &bundle.spectral)?;
    Ok((temporal_path, spectral_path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{read_spectral_csv, read_temporal_csv};

    fn config() -> ExperimentConfig {
        super::super::runner::tests::smoke_config(&["knn"])
    }

    #[test]
    fn class_selector_dumps_round_trippable_csvs() {
        let dir = tempfile::tempdir().unwrap();
        let (tpath, spath) =
            dump_features(&config(), &SegmentSelector::ByClass("class_1".into()), dir.path())
                .unwrap();
        let (names, temporal) = read_temporal_csv(&tpath).unwrap();
        assert_eq!(names.len(), 3);
        assert_eq!(temporal.rows(), 32);
        let spectral = read_spectral_csv(&spath).unwrap();
        assert_eq!(
            (spectral.scales, spectral.steps, spectral.channels),
            (6, 32, 3)
        );
        // reload equals the in-memory bundle
        let prepared = super::super::runner::prepare(&config()).unwrap();
        let seg = prepared
            .segments
            .iter()
            .find(|s| s.label.class_name == "class_1")
            .unwrap();
        let bundle = extract_bundle(seg, &config().features).unwrap();
        assert_eq!(bundle.temporal.data(), temporal.data());
        assert_eq!(bundle.spectral, spectral);
    }

    #[test]
    fn id_selector_finds_exactly_that_segment() {
        let dir = tempfile::tempdir().unwrap();
        let (tpath, _) =
            dump_features(&config(), &SegmentSelector::ById(5), dir.path()).unwrap();
        assert!(tpath.to_string_lossy().contains("segment_5_"));
    }

    #[test]
    fn empty_selection_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            dump_features(&config(), &SegmentSelector::ByClass("flying".into()), dir.path()),
            Err(Error::EmptySelection(_))
        ));
        assert!(matches!(
            dump_features(&config(), &SegmentSelector::ById(999_999), dir.path()),
            Err(Error::EmptySelection(_))
        ));
    }
}
