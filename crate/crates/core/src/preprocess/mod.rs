//! Raw recordings to fixed-length, denoised, normalized segments.
//!
//! Order is fixed: windowing, then per-segment moving-average smoothing,
//! then min-max normalization with statistics fitted on the training split
//! only and applied with clamping everywhere else.

mod cache;

pub use cache::{load_segment_cache, save_segment_cache};

use crate::dataset::{ActivityLabel, RawRecording};
use crate::error::{Error, Result};
use crate::mat::Mat;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;

fn default_window() -> usize {
    150
}
fn default_overlap() -> f64 {
    0.7
}
fn default_smoothing() -> usize {
    10
}

/// Normalization policy. Only train-split min-max is implemented; evaluation
/// segments are clamped into `[0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NormalizationMode {
    #[default]
    TrainSplitMinMax,
}

/// Windowing and smoothing parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessConfig {
    /// Window size S in samples.
    #[serde(default = "default_window")]
    pub window_size: usize,
    /// Fractional overlap between consecutive windows.
    #[serde(default = "default_overlap")]
    pub overlap_fraction: f64,
    /// Moving-average window M in samples.
    #[serde(default = "default_smoothing")]
    pub smoothing_window: usize,
    #[serde(default)]
    pub normalization: NormalizationMode,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            window_size: default_window(),
            overlap_fraction: default_overlap(),
            smoothing_window: default_smoothing(),
            normalization: NormalizationMode::TrainSplitMinMax,
        }
    }
}

impl PreprocessConfig {
    /// Window advance: `S - floor(overlap · S)`.
    pub fn stride(&self) -> usize {
        self.window_size - (self.overlap_fraction * self.window_size as f64).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.smoothing_window < 1 || self.window_size < self.smoothing_window {
            return Err(Error::Config(format!(
                "need window_size >= smoothing_window >= 1, got S={} M={}",
                self.window_size, self.smoothing_window
            )));
        }
        if !(0.0..1.0).contains(&self.overlap_fraction) {
            return Err(Error::Config(format!(
                "overlap_fraction {} outside [0, 1)",
                self.overlap_fraction
            )));
        }
        if self.stride() < 1 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        Ok(())
    }
}

/// Fixed-length window of a recording.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub id: u64,
    /// `[S × C]`.
    pub data: Mat,
    pub label: ActivityLabel,
    pub user_id: i64,
    pub source_recording: usize,
    pub start_index: usize,
}

/// Per-channel min/max fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationStats {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Which segment set the stats were fitted on.
    pub fitted_on: String,
}

/// Cuts one recording into windows starting at 0, stride, 2·stride, …
/// Count is `floor((L - S)/stride) + 1` when `L >= S`, else zero.
pub fn segment_recording(
    recording: &RawRecording,
    config: &PreprocessConfig,
    source_recording: usize,
    next_id: &mut u64,
) -> Vec<Segment> {
    let s = config.window_size;
    let l = recording.len();
    if l < s {
        return Vec::new();
    }
    let stride = config.stride();
    let count = (l - s) / stride + 1;
    let c = recording.num_channels();
    let mut out = Vec::with_capacity(count);
    for w in 0..count {
        let start = w * stride;
        let mut data = Vec::with_capacity(s * c);
        for r in start..start + s {
            data.extend_from_slice(recording.channels.row(r));
        }
        out.push(Segment {
            id: *next_id,
            data: Mat::from_vec(s, c, data),
            label: recording.activity.clone(),
            user_id: recording.user_id,
            source_recording,
            start_index: start,
        });
        *next_id += 1;
    }
    out
}

/// Centered moving average, truncated at the segment edges so length is
/// preserved: row `t` averages rows
/// `[t - floor((M-1)/2), t + ceil((M-1)/2)] ∩ [0, S)`.
pub fn moving_average(data: &Mat, m: usize) -> Mat {
    assert!(m >= 1, "smoothing window must be at least 1");
    if m == 1 {
        return data.clone();
    }
    let (s, c) = (data.rows(), data.cols());
    let back = (m - 1) / 2;
    let fwd = m / 2; // ceil((m-1)/2)
    let mut out = Mat::zeros(s, c);
    for t in 0..s {
        let lo = t.saturating_sub(back);
        let hi = (t + fwd).min(s - 1);
        let n = (hi - lo + 1) as f64;
        for ch in 0..c {
            let mut acc = 0.0;
            for r in lo..=hi {
                acc += data.get(r, ch);
            }
            out.set(t, ch, acc / n);
        }
    }
    out
}

/// Windows every recording and smooths each segment. Ids are sequential in
/// (recording, window) order, so the numbering is deterministic.
pub fn segment_and_smooth(
    recordings: &[RawRecording],
    config: &PreprocessConfig,
) -> Result<Vec<Segment>> {
    config.validate()?;
    let mut next_id = 0u64;
    let mut out = Vec::new();
    for (ri, rec) in recordings.iter().enumerate() {
        for mut seg in segment_recording(rec, config, ri, &mut next_id) {
            seg.data = moving_average(&seg.data, config.smoothing_window);
            out.push(seg);
        }
    }
    Ok(out)
}

/// Global per-channel min/max over the given segments.
pub fn fit_normalization(
    train_segments: &[&Segment],
    channel_names: &[String],
    fitted_on: &str,
) -> Result<NormalizationStats> {
    let first = train_segments
        .first()
        .ok_or_else(|| Error::Config("cannot fit normalization on an empty train set".into()))?;
    let c = first.data.cols();
    let mut min = vec![f64::INFINITY; c];
    let mut max = vec![f64::NEG_INFINITY; c];
    for seg in train_segments {
        for r in 0..seg.data.rows() {
            let row = seg.data.row(r);
            for ch in 0..c {
                min[ch] = min[ch].min(row[ch]);
                max[ch] = max[ch].max(row[ch]);
            }
        }
    }
    for ch in 0..c {
        if !(min[ch] < max[ch]) {
            let name = channel_names
                .get(ch)
                .cloned()
                .unwrap_or_else(|| format!("channel_{ch}"));
            return Err(Error::DegenerateChannel {
                channel: name,
                value: min[ch],
            });
        }
    }
    Ok(NormalizationStats {
        min,
        max,
        fitted_on: fitted_on.to_string(),
    })
}

/// `x -> (x - min)/(max - min)`, clamped into `[0, 1]`. Training segments
/// are inside the fitted range, so the clamp never changes them.
pub fn apply_normalization(mut segment: Segment, stats: &NormalizationStats) -> Segment {
    let c = segment.data.cols();
    assert_eq!(c, stats.min.len(), "normalization stats channel mismatch");
    for r in 0..segment.data.rows() {
        let row = segment.data.row_mut(r);
        for ch in 0..c {
            let scaled = (row[ch] - stats.min[ch]) / (stats.max[ch] - stats.min[ch]);
            row[ch] = scaled.clamp(0.0, 1.0);
        }
    }
    segment
}

/// Normalizes all segments in place, fitting on `train_ids` when given and
/// on the full set otherwise.
pub fn normalize_segments(
    segments: Vec<Segment>,
    train_ids: Option<&HashSet<u64>>,
    channel_names: &[String],
) -> Result<(Vec<Segment>, NormalizationStats)> {
    let (fit_set, tag): (Vec<&Segment>, &str) = match train_ids {
        Some(ids) => (
            segments.iter().filter(|s| ids.contains(&s.id)).collect(),
            "train",
        ),
        None => (segments.iter().collect(), "all"),
    };
    let stats = fit_normalization(&fit_set, channel_names, tag)?;
    let segments = segments
        .into_iter()
        .map(|s| apply_normalization(s, &stats))
        .collect();
    Ok((segments, stats))
}

/// Segmentation → smoothing → normalization over a whole corpus. Without a
/// train filter the statistics cover every segment (the self-contained path
/// used by feature dumps and smoke runs; experiment runs pass the train set).
pub fn preprocess_pipeline(
    recordings: &[RawRecording],
    config: &PreprocessConfig,
    train_ids: Option<&HashSet<u64>>,
) -> Result<(Vec<Segment>, NormalizationStats)> {
    let segments = segment_and_smooth(recordings, config)?;
    if segments.is_empty() {
        return Ok((
            Vec::new(),
            NormalizationStats {
                min: vec![],
                max: vec![],
                fitted_on: "empty".into(),
            },
        ));
    }
    let channel_names = recordings
        .first()
        .map(|r| r.channel_names.clone())
        .unwrap_or_default();
    normalize_segments(segments, train_ids, &channel_names)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn recording(l: usize, c: usize, f: impl Fn(usize, usize) -> f64) -> RawRecording {
        let mut data = Vec::with_capacity(l * c);
        for t in 0..l {
            for ch in 0..c {
                data.push(f(t, ch));
            }
        }
        RawRecording {
            user_id: 1,
            activity: ActivityLabel {
                class_index: 0,
                class_name: "class_0".into(),
            },
            channels: Mat::from_vec(l, c, data),
            channel_names: (0..c).map(|i| format!("ch_{i}")).collect(),
            start_timestamp: 0,
        }
    }

    fn config(s: usize, overlap: f64, m: usize) -> PreprocessConfig {
        PreprocessConfig {
            window_size: s,
            overlap_fraction: overlap,
            smoothing_window: m,
            normalization: NormalizationMode::TrainSplitMinMax,
        }
    }

    #[test]
    fn stride_45_from_paper_defaults() {
        assert_eq!(PreprocessConfig::default().stride(), 45);
    }

    #[test]
    fn l240_gives_three_windows_at_0_45_90() {
        let rec = recording(240, 2, |t, _| t as f64);
        let mut id = 0;
        let segs = segment_recording(&rec, &config(150, 0.7, 10), 0, &mut id);
        assert_eq!(segs.len(), 3);
        assert_eq!(
            segs.iter().map(|s| s.start_index).collect::<Vec<_>>(),
            vec![0, 45, 90]
        );
    }

    #[test]
    fn short_recording_yields_nothing_and_exact_fit_yields_one() {
        let mut id = 0;
        let short = recording(149, 1, |t, _| t as f64);
        assert!(segment_recording(&short, &config(150, 0.7, 10), 0, &mut id).is_empty());
        let exact = recording(150, 1, |t, _| t as f64);
        let segs = segment_recording(&exact, &config(150, 0.7, 10), 0, &mut id);
        assert_eq!(segs.len(), 1);
        assert_eq!(segs[0].data.rows(), 150);
    }

    #[test]
    fn moving_average_fixes_constants_and_m1_is_identity() {
        let rec = recording(30, 2, |_, ch| 3.5 + ch as f64);
        let smoothed = moving_average(&rec.channels, 10);
        assert_eq!(smoothed, rec.channels);
        let wavy = recording(30, 1, |t, _| (t as f64).sin());
        assert_eq!(moving_average(&wavy.channels, 1), wavy.channels);
    }

    #[test]
    fn interior_point_matches_prefix_sum_oracle() {
        // 12-sample hand series; M = 10 centers the window at [t-4, t+5].
        let series = [1.0, 4.0, 2.0, 8.0, 5.0, 7.0, 3.0, 9.0, 6.0, 0.0, 2.0, 4.0];
        let m = Mat::from_vec(12, 1, series.to_vec());
        let smoothed = moving_average(&m, 10);
        // prefix-sum oracle
        let mut prefix = vec![0.0; 13];
        for (i, v) in series.iter().enumerate() {
            prefix[i + 1] = prefix[i] + v;
        }
        let t = 5usize; // interior: window [1, 10] inclusive
        let oracle = (prefix[11] - prefix[1]) / 10.0;
        assert!((smoothed.get(t, 0) - oracle).abs() < 1e-12);
        // every position against the oracle with truncation
        for t in 0..12usize {
            let lo = t.saturating_sub(4);
            let hi = (t + 5).min(11);
            let expect = (prefix[hi + 1] - prefix[lo]) / (hi - lo + 1) as f64;
            assert!((smoothed.get(t, 0) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn fit_covers_union_of_ranges_and_rejects_degenerate() {
        let mk = |lo: f64, hi: f64| Segment {
            id: 0,
            data: Mat::from_vec(2, 1, vec![lo, hi]),
            label: ActivityLabel {
                class_index: 0,
                class_name: "a".into(),
            },
            user_id: 0,
            source_recording: 0,
            start_index: 0,
        };
        let a = mk(-2.0, 6.0);
        let stats = fit_normalization(&[&a], &["ch_0".into()], "train").unwrap();
        assert_eq!((stats.min[0], stats.max[0]), (-2.0, 6.0));
        let b = mk(0.0, 1.0);
        let c = mk(-1.0, 2.0);
        let stats = fit_normalization(&[&b, &c], &["ch_0".into()], "train").unwrap();
        assert_eq!((stats.min[0], stats.max[0]), (-1.0, 2.0));
        let flat = mk(5.0, 5.0);
        match fit_normalization(&[&flat], &["acc_y".into()], "train") {
            Err(Error::DegenerateChannel { channel, value }) => {
                assert_eq!(channel, "acc_y");
                assert_eq!(value, 5.0);
            }
            other => panic!("expected DegenerateChannel, got {other:?}"),
        }
    }

    #[test]
    fn normalization_endpoints_midpoint_and_clamp() {
        let stats = NormalizationStats {
            min: vec![-2.0],
            max: vec![6.0],
            fitted_on: "train".into(),
        };
        let seg = Segment {
            id: 0,
            data: Mat::from_vec(4, 1, vec![-2.0, 6.0, 2.0, -5.0]),
            label: ActivityLabel {
                class_index: 0,
                class_name: "a".into(),
            },
            user_id: 0,
            source_recording: 0,
            start_index: 0,
        };
        let out = apply_normalization(seg, &stats);
        assert_eq!(out.data.data(), &[0.0, 1.0, 0.5, 0.0]);
    }

    #[test]
    fn pipeline_on_empty_corpus_is_empty() {
        let (segs, stats) = preprocess_pipeline(&[], &PreprocessConfig::default(), None).unwrap();
        assert!(segs.is_empty());
        assert_eq!(stats.fitted_on, "empty");
    }

    #[test]
    fn inverse_normalization_restores_smoothed_values() {
        let rec = recording(120, 2, |t, ch| (0.31 * t as f64 + ch as f64).sin() * 4.0);
        let cfg = config(40, 0.5, 5);
        let smoothed = segment_and_smooth(&[rec.clone()], &cfg).unwrap();
        let (normalized, stats) = preprocess_pipeline(&[rec], &cfg, None).unwrap();
        for (n, s) in normalized.iter().zip(&smoothed) {
            for r in 0..n.data.rows() {
                for c in 0..n.data.cols() {
                    let restored =
                        n.data.get(r, c) * (stats.max[c] - stats.min[c]) + stats.min[c];
                    assert!((restored - s.data.get(r, c)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn pipeline_is_bit_deterministic() {
        let rec = recording(300, 3, |t, ch| ((t * (ch + 2)) as f64 * 0.17).sin());
        let cfg = config(64, 0.7, 8);
        let (a, sa) = preprocess_pipeline(&[rec.clone()], &cfg, None).unwrap();
        let (b, sb) = preprocess_pipeline(&[rec], &cfg, None).unwrap();
        assert_eq!(sa, sb);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.data.data(), y.data.data());
        }
    }

    proptest! {
        #[test]
        fn window_count_formula_holds(l in 1usize..400, s in 2usize..80, overlap in 0.0f64..0.95) {
            let cfg = config(s, overlap, 1);
            prop_assume!(cfg.validate().is_ok());
            let rec = recording(l, 1, |t, _| t as f64);
            let mut id = 0;
            let segs = segment_recording(&rec, &cfg, 0, &mut id);
            let expected = if l >= s { (l - s) / cfg.stride() + 1 } else { 0 };
            prop_assert_eq!(segs.len(), expected);
            for (w, seg) in segs.iter().enumerate() {
                prop_assert_eq!(seg.start_index, w * cfg.stride());
            }
        }

        #[test]
        fn smoothing_never_widens_range(values in proptest::collection::vec(-50.0f64..50.0, 8..60), m in 1usize..10) {
            let s = values.len();
            let mat = Mat::from_vec(s, 1, values.clone());
            let out = moving_average(&mat, m);
            let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
            for t in 0..s {
                prop_assert!(out.get(t, 0) >= lo - 1e-12 && out.get(t, 0) <= hi + 1e-12);
            }
        }

        #[test]
        fn smoothing_is_shift_equivariant(values in proptest::collection::vec(-10.0f64..10.0, 8..40), shift in -25.0f64..25.0, m in 1usize..8) {
            let s = values.len();
            let base = moving_average(&Mat::from_vec(s, 1, values.clone()), m);
            let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
            let out = moving_average(&Mat::from_vec(s, 1, shifted), m);
            for t in 0..s {
                prop_assert!((out.get(t, 0) - (base.get(t, 0) + shift)).abs() < 1e-12);
            }
        }

        #[test]
        fn normalization_preserves_extremum_positions(values in proptest::collection::vec(-20.0f64..20.0, 10..50)) {
            let s = values.len();
            let seg = Segment {
                id: 0,
                data: Mat::from_vec(s, 1, values.clone()),
                label: ActivityLabel { class_index: 0, class_name: "a".into() },
                user_id: 0,
                source_recording: 0,
                start_index: 0,
            };
            let spread = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - values.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assume!(spread > 1e-9);
            let stats = fit_normalization(&[&seg], &["ch".into()], "train").unwrap();
            let argmax = |xs: &[f64]| xs.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
            let argmin = |xs: &[f64]| xs.iter().enumerate().min_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
            let before = (argmax(&values), argmin(&values));
            let out = apply_normalization(seg, &stats);
            let after_vals: Vec<f64> = (0..s).map(|t| out.data.get(t, 0)).collect();
            prop_assert_eq!(before, (argmax(&after_vals), argmin(&after_vals)));
        }
    }
}
