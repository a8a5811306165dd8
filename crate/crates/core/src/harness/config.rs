//! Experiment configuration (TOML document).

use crate::dataset::{SplitStrategy, SynthSpec};
use crate::error::{Error, Result};
use crate::features::FeatureConfig;
use crate::models::ModelKind;
use crate::preprocess::PreprocessConfig;
use crate::training::TrainConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Wisdm,
    GenericCsv,
    Synth,
}

/// Where the corpus comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub kind: DatasetKind,
    /// Raw corpus file (file-backed kinds).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Manifest path; file-backed kinds require one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    /// Generator parameters (synth kind).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synth: Option<SynthSpec>,
}

fn default_strategy() -> SplitStrategy {
    SplitStrategy::SegmentStratified
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitConfig {
    #[serde(default = "default_strategy")]
    pub strategy: SplitStrategy,
    /// Defaults to the experiment seed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            strategy: default_strategy(),
            seed: None,
        }
    }
}

/// One experiment: corpus, pipeline parameters, model list and schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Model kind names, or the single entry "all".
    pub models: Vec<String>,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    #[serde(default)]
    pub features: FeatureConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub training: TrainConfig,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg: ExperimentConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{path:?}: {e}")))?;
        // paths in the config are relative to the config file
        if let Some(dir) = path.parent() {
            if let Some(p) = &cfg.dataset.path {
                if p.is_relative() {
                    cfg.dataset.path = Some(dir.join(p));
                }
            }
            if let Some(m) = &cfg.dataset.manifest {
                if m.is_relative() {
                    cfg.dataset.manifest = Some(dir.join(m));
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::Config("no models listed".into()));
        }
        self.model_kinds()?;
        self.preprocess.validate()?;
        self.features.validate()?;
        self.training.validate()?;
        match self.dataset.kind {
            DatasetKind::Synth => {
                if self.dataset.synth.is_none() {
                    return Err(Error::Config("synth dataset needs a [dataset.synth] block".into()));
                }
            }
            _ => {
                if self.dataset.path.is_none() {
                    return Err(Error::Config("file-backed dataset needs a path".into()));
                }
                if self.dataset.manifest.is_none() {
                    return Err(Error::Config("file-backed dataset needs a manifest".into()));
                }
            }
        }
        Ok(())
    }

    /// Resolved model list; "all" expands to every kind.
    pub fn model_kinds(&self) -> Result<Vec<ModelKind>> {
        if self.models.len() == 1 && self.models[0].trim().eq_ignore_ascii_case("all") {
            return Ok(ModelKind::ALL.to_vec());
        }
        self.models.iter().map(|m| m.parse()).collect()
    }

    pub fn split_seed(&self) -> u64 {
        self.split.seed.unwrap_or(self.seed)
    }

    /// Canonical digest over the resolved config.
    pub fn digest(&self) -> [u8; 32] {
        use sha2::{Digest, Sha256};
        let json = serde_json::to_vec(self).expect("config serializes");
        Sha256::digest(&json).into()
    }

    /// Digest over the fields that must agree for reports to share a table:
    /// corpus definition, preprocessing, features and split. Schedule and
    /// model list may differ across merged reports.
    pub fn table_digest(&self) -> [u8; 32] {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(serde_json::to_vec(&self.dataset).unwrap());
        h.update(serde_json::to_vec(&self.preprocess).unwrap());
        h.update(serde_json::to_vec(&self.features).unwrap());
        h.update(serde_json::to_vec(&self.split).unwrap());
        h.update(self.split_seed().to_le_bytes());
        h.finalize().into()
    }
}

pub(crate) fn hex(digest: &[u8; 32]) -> String {
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMOKE: &str = r#"
name = "smoke"
seed = 17
models = ["knn", "lstm"]

[dataset]
kind = "synth"

[dataset.synth]
classes = 6
users = 3
channels = 3
length = 200
seed = 7

[preprocess]
window_size = 64
overlap_fraction = 0.5
smoothing_window = 3

[features]
cwt_scales = 8

[training]
epochs_ce = 2
batch_size = 16
"#;

    #[test]
    fn parses_and_validates_smoke_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, SMOKE).unwrap();
        let cfg = ExperimentConfig::load(&path).unwrap();
        assert_eq!(cfg.model_kinds().unwrap(), vec![ModelKind::Knn, ModelKind::Lstm]);
        assert_eq!(cfg.split_seed(), 17);
        assert_eq!(cfg.preprocess.stride(), 32);
    }

    #[test]
    fn all_expands_to_sixteen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, SMOKE.replace("[\"knn\", \"lstm\"]", "[\"all\"]")).unwrap();
        let cfg = ExperimentConfig::load(&path).unwrap();
        assert_eq!(cfg.model_kinds().unwrap().len(), 16);
    }

    #[test]
    fn zero_models_is_a_config_error() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, SMOKE.replace("[\"knn\", \"lstm\"]", "[]")).unwrap();
        assert!(matches!(
            ExperimentConfig::load(&path),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn table_digest_ignores_models_and_schedule() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, SMOKE).unwrap();
        let a = ExperimentConfig::load(&path).unwrap();
        let mut b = a.clone();
        b.models = vec!["rf".into()];
        b.training.schedule = crate::training::Schedule::SupconThenCe;
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.table_digest(), b.table_digest());
        let mut c = a.clone();
        c.preprocess.window_size = 80;
        assert_ne!(a.table_digest(), c.table_digest());
    }
}
