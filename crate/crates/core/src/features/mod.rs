//! The three feature representations extracted from each segment: the
//! temporal matrix (the segment itself), per-channel statistics, and the
//! Morlet continuous-wavelet-transform magnitude tensor.

mod cwt;
mod dump;
mod extract;

pub use cwt::{cwt_morlet, cwt_morlet_with_mode};
pub use dump::{dump_spectral_csv, dump_temporal_csv, read_spectral_csv, read_temporal_csv};
pub use extract::{
    extract_bundle, spectral_features, statistical_features, temporal_features, FeatureBundle,
    Spectral, STATISTICAL_FUNCTIONS,
};

use serde::{Deserialize, Serialize};

fn default_scales() -> usize {
    50
}
fn default_omega0() -> f64 {
    6.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Wavelet {
    #[default]
    Morlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpectralValue {
    /// Complex magnitude of the transform.
    #[default]
    Magnitude,
}

/// Feature extraction parameters. The statistical function list is fixed
/// (min, max, mean, std); the spectral scales are the integers `1..=K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureConfig {
    /// Number of CWT scales K.
    #[serde(default = "default_scales")]
    pub cwt_scales: usize,
    #[serde(default)]
    pub wavelet: Wavelet,
    /// Morlet center frequency ω0.
    #[serde(default = "default_omega0")]
    pub morlet_center_frequency: f64,
    #[serde(default)]
    pub spectral_value: SpectralValue,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            cwt_scales: default_scales(),
            wavelet: Wavelet::Morlet,
            morlet_center_frequency: default_omega0(),
            spectral_value: SpectralValue::Magnitude,
        }
    }
}

impl FeatureConfig {
    pub fn validate(&self) -> crate::Result<()> {
        if self.cwt_scales < 1 {
            return Err(crate::Error::Config("cwt_scales must be at least 1".into()));
        }
        if self.morlet_center_frequency <= 0.0 {
            return Err(crate::Error::Config(
                "morlet_center_frequency must be positive".into(),
            ));
        }
        Ok(())
    }

    /// The integer scale ladder `1..=K`.
    pub fn scales(&self) -> Vec<f64> {
        (1..=self.cwt_scales).map(|k| k as f64).collect()
    }
}
