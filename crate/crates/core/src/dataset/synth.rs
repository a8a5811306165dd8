//! Deterministic synthetic corpus for CI and sanity floors.
//!
//! Each class is a sinusoid profile with its own amplitude band, frequency
//! and noise level per channel. Amplitude bands grow geometrically, so the
//! per-channel standard deviation separates classes with zero overlap by
//! construction.

use super::manifest::DatasetManifest;
use super::types::{ActivityLabel, RawRecording};
use crate::mat::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

fn default_ratio() -> f64 {
    3.0
}
fn default_recordings() -> usize {
    1
}
fn default_noise() -> f64 {
    0.05
}

/// Shape of a synthetic corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub classes: usize,
    pub users: usize,
    pub channels: usize,
    /// Samples per recording.
    pub length: usize,
    pub seed: u64,
    /// Recordings per (user, class) pair.
    #[serde(default = "default_recordings")]
    pub recordings_per_user: usize,
    /// Half-width of the uniform additive noise, as a fraction of the class
    /// amplitude. Zero gives exact closed-form sinusoids.
    #[serde(default = "default_noise")]
    pub noise: f64,
    /// Geometric growth of per-class amplitude bands.
    #[serde(default = "default_ratio")]
    pub amplitude_ratio: f64,
}

impl SynthSpec {
    /// Class amplitude: `ratio^z`, giving disjoint bands.
    pub fn amplitude(&self, class: usize) -> f64 {
        self.amplitude_ratio.powi(class as i32)
    }

    /// Cycles per sample for (class, channel); kept well below Nyquist and
    /// above two cycles per 64-sample window so windowed statistics stay
    /// inside their class band.
    pub fn frequency(&self, class: usize, channel: usize) -> f64 {
        0.04 + 0.018 * class as f64 + 0.004 * channel as f64
    }

    /// Closed-form noiseless sample.
    pub fn clean_sample(&self, class: usize, channel: usize, phase: f64, t: usize) -> f64 {
        self.amplitude(class) * (TAU * self.frequency(class, channel) * t as f64 + phase).sin()
    }

    /// Manifest describing the synthetic corpus.
    pub fn manifest(&self) -> DatasetManifest {
        DatasetManifest {
            name: format!("synth-{}c-{}u-seed{}", self.classes, self.users, self.seed),
            num_classes: self.classes,
            class_names: (0..self.classes).map(|z| format!("class_{z}")).collect(),
            channel_names: (0..self.channels).map(|c| format!("ch_{c}")).collect(),
            sampling_note: "synthetic sinusoid profiles, unit sample rate".into(),
            source_files: vec![],
        }
    }
}

/// Generates the corpus. Bit-identical for a fixed spec.
pub fn synth_generate(spec: &SynthSpec) -> Vec<RawRecording> {
    assert!(spec.classes >= 2, "synthetic corpus needs at least 2 classes");
    assert!(spec.users >= 1 && spec.channels >= 1 && spec.length >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = Vec::with_capacity(spec.users * spec.classes * spec.recordings_per_user);
    for user in 0..spec.users {
        for class in 0..spec.classes {
            for rec in 0..spec.recordings_per_user {
                let phases: Vec<f64> =
                    (0..spec.channels).map(|_| rng.gen_range(0.0..TAU)).collect();
                let amp = spec.amplitude(class);
                let half_width = spec.noise * amp;
                let mut data = Vec::with_capacity(spec.length * spec.channels);
                for t in 0..spec.length {
                    for ch in 0..spec.channels {
                        let clean = spec.clean_sample(class, ch, phases[ch], t);
                        let noise = if half_width > 0.0 {
                            rng.gen_range(-half_width..half_width)
                        } else {
                            0.0
                        };
                        data.push(clean + noise);
                    }
                }
                out.push(RawRecording {
                    user_id: user as i64,
                    activity: ActivityLabel {
                        class_index: class,
                        class_name: format!("class_{class}"),
                    },
                    channels: Mat::from_vec(spec.length, spec.channels, data),
                    channel_names: (0..spec.channels).map(|c| format!("ch_{c}")).collect(),
                    start_timestamp: (rec * spec.length) as i64,
                });
            }
        }
    }
    out
}
