//! Per-segment feature extraction.

use super::cwt::cwt_morlet;
use super::FeatureConfig;
use crate::error::Result;
use crate::mat::Mat;
use crate::preprocess::Segment;

/// The fixed statistical function list, in output order per channel.
pub const STATISTICAL_FUNCTIONS: [&str; 4] = ["min", "max", "mean", "std"];

/// Wavelet magnitude tensor `[K × S × C]`, row-major over (scale, time,
/// channel); all entries are non-negative magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectral {
    pub scales: usize,
    pub steps: usize,
    pub channels: usize,
    pub data: Vec<f64>,
}

impl Spectral {
    #[inline]
    pub fn get(&self, k: usize, t: usize, c: usize) -> f64 {
        self.data[(k * self.steps + t) * self.channels + c]
    }

    /// One channel's `[K × S]` slice.
    pub fn channel(&self, c: usize) -> Mat {
        let mut out = Mat::zeros(self.scales, self.steps);
        for k in 0..self.scales {
            for t in 0..self.steps {
                out.set(k, t, self.get(k, t, c));
            }
        }
        out
    }
}

/// All three representations for one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureBundle {
    /// `[S × C]`, identical to the preprocessed segment data.
    pub temporal: Mat,
    /// `[4·C]`, channel-major (min, max, mean, std) per channel.
    pub statistical: Vec<f64>,
    pub spectral: Spectral,
    pub segment_id: u64,
}

/// Identity copy of the preprocessed segment data.
pub fn temporal_features(segment: &Segment) -> Mat {
    segment.data.clone()
}

/// Channel-major (min, max, mean, population std) vector of length `4·C`.
pub fn statistical_features(segment: &Segment) -> Vec<f64> {
    let (s, c) = (segment.data.rows(), segment.data.cols());
    assert!(s >= 2, "statistical features need at least 2 samples");
    let mut out = Vec::with_capacity(4 * c);
    for ch in 0..c {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        let mut sum = 0.0;
        for r in 0..s {
            let v = segment.data.get(r, ch);
            min = min.min(v);
            max = max.max(v);
            sum += v;
        }
        let mean = sum / s as f64;
        let var = (0..s)
            .map(|r| {
                let d = segment.data.get(r, ch) - mean;
                d * d
            })
            .sum::<f64>()
            / s as f64;
        out.extend_from_slice(&[min, max, mean, var.sqrt()]);
    }
    out
}

/// CWT magnitudes per channel with integer scales `1..=K`.
pub fn spectral_features(segment: &Segment, config: &FeatureConfig) -> Result<Spectral> {
    config.validate()?;
    let (s, c) = (segment.data.rows(), segment.data.cols());
    let scales = config.scales();
    let k = scales.len();
    let mut data = vec![0.0; k * s * c];
    for ch in 0..c {
        let signal = segment.data.column(ch);
        let mat = cwt_morlet(&signal, &scales, config.morlet_center_frequency)?;
        for ki in 0..k {
            for t in 0..s {
                data[(ki * s + t) * c + ch] = mat.get(ki, t);
            }
        }
    }
    Ok(Spectral {
        scales: k,
        steps: s,
        channels: c,
        data,
    })
}

/// Composition of the three extractors.
pub fn extract_bundle(segment: &Segment, config: &FeatureConfig) -> Result<FeatureBundle> {
    Ok(FeatureBundle {
        temporal: temporal_features(segment),
        statistical: statistical_features(segment),
        spectral: spectral_features(segment, config)?,
        segment_id: segment.id,
    })
}
