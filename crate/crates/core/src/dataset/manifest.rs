//! Dataset manifest: class and channel naming plus source provenance.

use super::types::ActivityLabel;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::Path;

/// Declared source file with an optional pinned content digest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sha256: Option<String>,
}

/// Names, class mapping and provenance for one dataset.
///
/// Stored as a TOML document; the label ↔ index mapping is fixed by
/// `class_names` order and persisted with every report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub num_classes: usize,
    pub class_names: Vec<String>,
    pub channel_names: Vec<String>,
    #[serde(default)]
    pub sampling_note: String,
    #[serde(default)]
    pub source_files: Vec<SourceFile>,
}

impl DatasetManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: DatasetManifest =
            toml::from_str(&text).map_err(|e| Error::Manifest(format!("{path:?}: {e}")))?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = toml::to_string_pretty(self)
            .map_err(|e| Error::Manifest(format!("serialize: {e}")))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes != self.class_names.len() {
            return Err(Error::Manifest(format!(
                "num_classes = {} but {} class names listed",
                self.num_classes,
                self.class_names.len()
            )));
        }
        if self.class_names.is_empty() || self.channel_names.is_empty() {
            return Err(Error::Manifest(
                "class_names and channel_names must be non-empty".into(),
            ));
        }
        Ok(())
    }

    /// Case-insensitive, trimmed class lookup. The manifest stores the
    /// canonical names.
    pub fn class_index(&self, name: &str) -> Option<usize> {
        let needle = name.trim().to_lowercase();
        self.class_names
            .iter()
            .position(|c| c.trim().to_lowercase() == needle)
    }

    pub fn label(&self, class_index: usize) -> ActivityLabel {
        ActivityLabel {
            class_index,
            class_name: self.class_names[class_index].clone(),
        }
    }

    /// Verifies `bytes` against a pinned digest when the manifest declares
    /// one for this path (matched on the file name).
    pub fn verify_source_digest(&self, path: &Path, bytes: &[u8]) -> Result<()> {
        let fname = path.file_name().map(|f| f.to_string_lossy().to_string());
        for sf in &self.source_files {
            let declared = Path::new(&sf.path)
                .file_name()
                .map(|f| f.to_string_lossy().to_string());
            if declared == fname || sf.path == path.to_string_lossy() {
                if let Some(expected) = &sf.sha256 {
                    let actual = sha256_hex(bytes);
                    if &actual != expected {
                        return Err(Error::DigestMismatch {
                            path: path.to_path_buf(),
                            expected: expected.clone(),
                            actual,
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Lowercase hex SHA-256.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wisdm_manifest() -> DatasetManifest {
        DatasetManifest {
            name: "wisdm-v1.1".into(),
            num_classes: 6,
            class_names: [
                "Walking",
                "Jogging",
                "Upstairs",
                "Downstairs",
                "Sitting",
                "Standing",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            channel_names: vec!["acc_x".into(), "acc_y".into(), "acc_z".into()],
            sampling_note: "20 Hz nominal".into(),
            source_files: vec![],
        }
    }

    #[test]
    fn class_lookup_is_case_insensitive_and_trimmed() {
        let m = wisdm_manifest();
        assert_eq!(m.class_index("  jogging "), Some(1));
        assert_eq!(m.class_index("WALKING"), Some(0));
        assert_eq!(m.class_index("flying"), None);
    }

    #[test]
    fn validation_catches_count_mismatch() {
        let mut m = wisdm_manifest();
        m.num_classes = 5;
        assert!(m.validate().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.toml");
        let m = wisdm_manifest();
        m.save(&path).unwrap();
        let back = DatasetManifest::load(&path).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn digest_mismatch_is_fatal() {
        let mut m = wisdm_manifest();
        m.source_files.push(SourceFile {
            path: "corpus.txt".into(),
            sha256: Some(sha256_hex(b"expected-bytes")),
        });
        assert!(m
            .verify_source_digest(Path::new("/tmp/corpus.txt"), b"expected-bytes")
            .is_ok());
        assert!(matches!(
            m.verify_source_digest(Path::new("/tmp/corpus.txt"), b"other"),
            Err(Error::DigestMismatch { .. })
        ));
    }
}
