//! Per-video frame selection.
//!
//! Static selection spreads `n` picks evenly over the candidate frames and
//! repairs picks that fail validation by moving to the nearest valid frame in
//! a small window. Dynamic selection runs farthest-point sampling over the
//! valid frames' embeddings under cosine distance.
//!
//! Planning operates on the candidate frames recorded in the store for a
//! video (the extractor's sampled superset), so plan positions always refer
//! to frames that have an embedding.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embstore::{EmbeddingStore, FrameRecord, VideoEntry};
use crate::vector;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SelectError {
    #[error("video duration must be positive, got {0}")]
    NonPositiveDuration(f64),
    #[error("video has no frames (T = 0)")]
    NoFrames,
    #[error("sample count must be at least 1")]
    ZeroSamples,
    #[error("invalid selection parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionParams {
    pub fps: f64,
    pub n_min: usize,
    pub n_max: usize,
    pub black_low: f64,
    pub bright_high: f64,
    pub gray_std_min: f64,
    pub repair_window: usize,
}

impl Default for SelectionParams {
    fn default() -> Self {
        Self {
            fps: 1.0,
            n_min: 4,
            n_max: 100,
            black_low: 5.0,
            bright_high: 250.0,
            gray_std_min: 10.0,
            repair_window: 5,
        }
    }
}

impl SelectionParams {
    pub fn validate(&self) -> Result<(), SelectError> {
        let bad = |msg: String| Err(SelectError::InvalidParams(msg));
        if !(self.fps > 0.0 && self.fps.is_finite()) {
            return bad(format!("fps must be positive, got {}", self.fps));
        }
        if self.n_min == 0 || self.n_min > self.n_max {
            return bad(format!("need 0 < n_min <= n_max, got {}..{}", self.n_min, self.n_max));
        }
        for (name, v) in [
            ("black_low", self.black_low),
            ("bright_high", self.bright_high),
            ("gray_std_min", self.gray_std_min),
        ] {
            if !(0.0..=255.0).contains(&v) {
                return bad(format!("{name} must lie in [0, 255], got {v}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    Static,
    Dynamic,
}

impl FromStr for SelectionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "static" => Ok(Self::Static),
            "dynamic" => Ok(Self::Dynamic),
            other => Err(format!("unknown selection mode {other:?} (expected static|dynamic)")),
        }
    }
}

impl fmt::Display for SelectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Static => "static",
            Self::Dynamic => "dynamic",
        })
    }
}

/// `n = min(max(⌊duration · fps⌋, n_min), n_max)`.
pub fn plan_sample_count(duration_s: f64, params: &SelectionParams) -> Result<usize, SelectError> {
    if !(duration_s > 0.0) || !duration_s.is_finite() {
        return Err(SelectError::NonPositiveDuration(duration_s));
    }
    let raw = (duration_s * params.fps).floor();
    let raw = if raw >= usize::MAX as f64 { usize::MAX } else { raw as usize };
    Ok(raw.max(params.n_min).min(params.n_max))
}

/// Evenly spaced indices `⌊i·(T−1)/(n−1)⌋` for `i = 0..n`. `n` is clamped to
/// `T`; `n = 1` yields `[0]`.
pub fn static_indices(total: usize, n: usize) -> Result<Vec<usize>, SelectError> {
    if total == 0 {
        return Err(SelectError::NoFrames);
    }
    if n == 0 {
        return Err(SelectError::ZeroSamples);
    }
    let n = n.min(total);
    if n == 1 {
        return Ok(vec![0]);
    }
    let span = (total - 1) as u128;
    let steps = (n - 1) as u128;
    let mut out: Vec<usize> = (0..n as u128).map(|i| (i * span / steps) as usize).collect();
    out.dedup();
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum InvalidReason {
    Uniform,
    Dark,
    Overexposed,
    Corrupted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameValidity {
    Valid,
    Invalid(InvalidReason),
}

impl FrameValidity {
    pub fn is_valid(self) -> bool {
        self == Self::Valid
    }
}

/// Checks uniformity, darkness, overexposure and corruption, in that order.
/// Frames whose statistics are not finite numbers count as corrupted.
pub fn validate_frame(frame: &FrameRecord, params: &SelectionParams) -> FrameValidity {
    use InvalidReason::*;
    if frame.gray_std < params.gray_std_min {
        FrameValidity::Invalid(Uniform)
    } else if frame.brightness < params.black_low {
        FrameValidity::Invalid(Dark)
    } else if frame.brightness > params.bright_high {
        FrameValidity::Invalid(Overexposed)
    } else if !frame.gray_std.is_finite() || !frame.brightness.is_finite() {
        FrameValidity::Invalid(Corrupted)
    } else {
        FrameValidity::Valid
    }
}

/// Nearest valid index within `±window` of `idx`, earlier frame on ties.
/// `None` means the position is skipped.
pub fn repair_index(idx: usize, validity: &[bool], window: usize) -> Option<usize> {
    if validity.get(idx).copied().unwrap_or(false) {
        return Some(idx);
    }
    (1..=window).find_map(|d| {
        let before = idx.checked_sub(d).filter(|&j| validity[j]);
        let after = Some(idx + d).filter(|&j| j < validity.len() && validity[j]);
        before.or(after)
    })
}

fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    // Zero descriptors are treated as orthogonal to everything.
    1.0 - vector::cosine(a, b).unwrap_or(0.0)
}

/// Farthest-point sampling under cosine distance, seeded at index 0. Each
/// step adds the frame whose minimum distance to the selected set is largest
/// (ties: smallest index). Output is sorted.
pub fn diverse_indices(descriptors: &[Vec<f64>], n: usize) -> Vec<usize> {
    let count = descriptors.len();
    if count == 0 || n == 0 {
        return Vec::new();
    }
    let target = n.min(count);
    let mut selected = vec![false; count];
    let mut min_dist = vec![f64::INFINITY; count];
    let mut picked = Vec::with_capacity(target);
    let mut next = 0usize;
    loop {
        selected[next] = true;
        picked.push(next);
        if picked.len() == target {
            break;
        }
        for j in 0..count {
            if !selected[j] {
                min_dist[j] = min_dist[j].min(cosine_distance(&descriptors[next], &descriptors[j]));
            }
        }
        let mut best: Option<(usize, f64)> = None;
        for j in (0..count).filter(|&j| !selected[j]) {
            if best.is_none_or(|(_, d)| min_dist[j] > d) {
                best = Some((j, min_dist[j]));
            }
        }
        next = best.expect("target < count leaves an unselected frame").0;
    }
    picked.sort_unstable();
    picked
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionPlan {
    pub video_id: String,
    pub mode: SelectionMode,
    /// Selected source-frame indices, sorted and unique.
    pub indices: Vec<u64>,
    /// Source-frame indices of planned positions dropped after failed repair.
    pub skipped: Vec<u64>,
}

/// Plans the frames of one video.
pub fn plan_video(
    video: &VideoEntry,
    store: &EmbeddingStore,
    mode: SelectionMode,
    params: &SelectionParams,
) -> Result<SelectionPlan, SelectError> {
    let n = plan_sample_count(video.duration_s, params)?;
    let frames = &video.frames;
    let mut plan = SelectionPlan {
        video_id: video.video_id.clone(),
        mode,
        indices: Vec::new(),
        skipped: Vec::new(),
    };
    if frames.is_empty() {
        return Ok(plan);
    }
    let validity: Vec<bool> = frames.iter().map(|f| validate_frame(f, params).is_valid()).collect();

    let mut positions = match mode {
        SelectionMode::Static => {
            let mut out = Vec::new();
            for p in static_indices(frames.len(), n)? {
                match repair_index(p, &validity, params.repair_window) {
                    Some(q) => out.push(q),
                    None => plan.skipped.push(frames[p].index),
                }
            }
            out
        }
        SelectionMode::Dynamic => {
            let valid: Vec<usize> = (0..frames.len()).filter(|&i| validity[i]).collect();
            let descriptors: Vec<Vec<f64>> = valid
                .iter()
                .map(|&i| vector::to_f64(store.embedding(frames[i].embedding_row)))
                .collect();
            diverse_indices(&descriptors, n).into_iter().map(|k| valid[k]).collect()
        }
    };
    positions.sort_unstable();
    positions.dedup();
    plan.indices = positions.into_iter().map(|p| frames[p].index).collect();
    Ok(plan)
}

/// Plans every video in the store; output follows manifest order.
pub fn plan_store(
    store: &EmbeddingStore,
    mode: SelectionMode,
    params: &SelectionParams,
) -> Result<Vec<SelectionPlan>, SelectError> {
    params.validate()?;
    store
        .manifest
        .par_iter()
        .map(|v| plan_video(v, store, mode, params))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(gray_std: f64, brightness: f64) -> FrameRecord {
        FrameRecord {
            index: 0,
            timestamp_s: 0.0,
            embedding_row: 0,
            gray_std,
            brightness,
            confidence: None,
            luma8x8: [0; 64],
        }
    }

    #[test]
    fn sample_count_clamps() {
        let p = SelectionParams::default();
        assert_eq!(plan_sample_count(2.0, &p).unwrap(), 4);
        assert_eq!(plan_sample_count(50.0, &p).unwrap(), 50);
        assert_eq!(plan_sample_count(50.9, &p).unwrap(), 50);
        assert_eq!(plan_sample_count(500.0, &p).unwrap(), 100);
        assert_eq!(plan_sample_count(0.0, &p), Err(SelectError::NonPositiveDuration(0.0)));
        assert!(plan_sample_count(-1.0, &p).is_err());
    }

    #[test]
    fn static_examples() {
        assert_eq!(static_indices(100, 4).unwrap(), vec![0, 33, 66, 99]);
        assert_eq!(static_indices(1, 7).unwrap(), vec![0]);
        assert_eq!(static_indices(10, 10).unwrap(), (0..10).collect::<Vec<_>>());
        assert_eq!(static_indices(5, 1).unwrap(), vec![0]);
        assert_eq!(static_indices(3, 8).unwrap(), vec![0, 1, 2]);
        assert_eq!(static_indices(0, 3), Err(SelectError::NoFrames));
    }

    #[test]
    fn validation_order() {
        let p = SelectionParams::default();
        assert_eq!(validate_frame(&record(50.0, 128.0), &p), FrameValidity::Valid);
        assert_eq!(validate_frame(&record(3.0, 128.0), &p), FrameValidity::Invalid(InvalidReason::Uniform));
        assert_eq!(validate_frame(&record(3.0, 0.0), &p), FrameValidity::Invalid(InvalidReason::Uniform));
        assert_eq!(validate_frame(&record(30.0, 4.9), &p), FrameValidity::Invalid(InvalidReason::Dark));
        assert_eq!(validate_frame(&record(30.0, 252.0), &p), FrameValidity::Invalid(InvalidReason::Overexposed));
        assert_eq!(validate_frame(&record(30.0, f64::NAN), &p), FrameValidity::Invalid(InvalidReason::Corrupted));
        // boundaries are inclusive
        assert!(validate_frame(&record(10.0, 5.0), &p).is_valid());
        assert!(validate_frame(&record(10.0, 250.0), &p).is_valid());
    }

    #[test]
    fn repair_examples() {
        let mut validity = vec![false; 20];
        validity[8] = true;
        validity[13] = true;
        assert_eq!(repair_index(10, &validity, 5), Some(8));

        let mut validity = vec![false; 20];
        validity[9] = true;
        validity[11] = true;
        assert_eq!(repair_index(10, &validity, 5), Some(9));

        let mut validity = vec![false; 20];
        validity[4] = true;
        validity[16] = true;
        assert_eq!(repair_index(10, &validity, 5), None);

        let validity = vec![true; 3];
        assert_eq!(repair_index(1, &validity, 5), Some(1));
        // window truncated at both ends of the video
        assert_eq!(repair_index(0, &[false, false, true], 5), Some(2));
    }

    #[test]
    fn diverse_examples() {
        let same = vec![vec![1.0, 2.0]; 5];
        assert_eq!(diverse_indices(&same, 3), vec![0, 1, 2]);
        let d = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(diverse_indices(&d, 2), vec![0, 2]);
        assert_eq!(diverse_indices(&d, 10), vec![0, 1, 2]);
        assert!(diverse_indices(&[], 3).is_empty());
    }

    #[test]
    fn params_validation() {
        assert!(SelectionParams::default().validate().is_ok());
        let p = SelectionParams { n_min: 0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = SelectionParams { n_min: 10, n_max: 5, ..Default::default() };
        assert!(p.validate().is_err());
        let p = SelectionParams { bright_high: 300.0, ..Default::default() };
        assert!(p.validate().is_err());
    }
}
