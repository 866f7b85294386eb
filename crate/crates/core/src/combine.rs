//! Frame-embedding combination.
//!
//! Reduces the `N × d` frame embeddings of one video to a single `d`-vector.
//! Five strategies are available:
//!
//! | method | weights |
//! |--------|---------|
//! | average | none, plain mean |
//! | max_confidence | none, picks the most confident frame |
//! | weighted_diversity | softmax of per-frame similarity variance |
//! | weighted_confidence | softmax of classifier confidence |
//! | temporal_coherence | softmax of mean similarity to temporal neighbours |
//!
//! Weighted methods return `v = Σ wᵢ fᵢ` with `w` a softmax over per-frame
//! scores divided by a temperature `tau`. Frames are not normalized before
//! aggregation; cosine similarities normalize internally.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::vector;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CombineError {
    #[error("no frames to combine")]
    NoFrames,
    #[error("frame {frame} has dimension {found}, expected {expected}")]
    DimMismatch {
        frame: usize,
        expected: usize,
        found: usize,
    },
    #[error("frame {0} has no classifier confidence")]
    MissingConfidence(usize),
    #[error("expected {expected} confidences, got {found}")]
    ConfidenceCount { expected: usize, found: usize },
    #[error("frame {0} has a zero-norm embedding")]
    ZeroNorm(usize),
    #[error("score {0} is not finite")]
    NonFiniteScore(usize),
    #[error("temperature must be positive and finite, got {0}")]
    InvalidTau(f64),
    #[error("window radius must be at least 1")]
    InvalidRadius,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineMethod {
    Average,
    MaxConfidence,
    WeightedDiversity,
    WeightedConfidence,
    TemporalCoherence,
}

impl CombineMethod {
    pub const ALL: [CombineMethod; 5] = [
        Self::Average,
        Self::MaxConfidence,
        Self::WeightedDiversity,
        Self::WeightedConfidence,
        Self::TemporalCoherence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Average => "average",
            Self::MaxConfidence => "max_confidence",
            Self::WeightedDiversity => "weighted_diversity",
            Self::WeightedConfidence => "weighted_confidence",
            Self::TemporalCoherence => "temporal_coherence",
        }
    }

    pub fn needs_confidence(self) -> bool {
        matches!(self, Self::MaxConfidence | Self::WeightedConfidence)
    }

    /// Default temperature: 1.0 for temporal coherence, 2.0 otherwise.
    pub fn default_tau(self) -> f64 {
        match self {
            Self::TemporalCoherence => 1.0,
            _ => 2.0,
        }
    }
}

impl fmt::Display for CombineMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CombineMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown combination method {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombineParams {
    pub method: CombineMethod,
    pub tau: f64,
    pub radius: usize,
}

impl CombineParams {
    pub fn new(method: CombineMethod) -> Self {
        Self {
            method,
            tau: method.default_tau(),
            radius: 1,
        }
    }

    pub fn validate(&self) -> Result<(), CombineError> {
        check_tau(self.tau)?;
        if self.radius == 0 {
            return Err(CombineError::InvalidRadius);
        }
        Ok(())
    }
}

impl Default for CombineParams {
    fn default() -> Self {
        Self::new(CombineMethod::Average)
    }
}

/// Result of combining one video's frames.
#[derive(Debug, Clone, PartialEq)]
pub struct Combined {
    pub vector: Vec<f64>,
    /// Per-frame weights actually used; empty for average and max-confidence.
    pub weights: Vec<f64>,
}

/// A combined vector tagged with its video and method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoEmbedding {
    pub video_id: String,
    pub method: CombineMethod,
    pub vector: Vec<f64>,
    pub weights: Vec<f64>,
}

fn check_tau(tau: f64) -> Result<(), CombineError> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(CombineError::InvalidTau(tau))
    }
}

fn check_frames(frames: &[Vec<f64>]) -> Result<usize, CombineError> {
    let first = frames.first().ok_or(CombineError::NoFrames)?;
    let dim = first.len();
    for (i, f) in frames.iter().enumerate() {
        if f.len() != dim {
            return Err(CombineError::DimMismatch {
                frame: i,
                expected: dim,
                found: f.len(),
            });
        }
    }
    Ok(dim)
}

fn check_confidences(frames: &[Vec<f64>], confidences: &[Option<f64>]) -> Result<Vec<f64>, CombineError> {
    if confidences.len() != frames.len() {
        return Err(CombineError::ConfidenceCount {
            expected: frames.len(),
            found: confidences.len(),
        });
    }
    confidences
        .iter()
        .enumerate()
        .map(|(i, c)| c.ok_or(CombineError::MissingConfidence(i)))
        .collect()
}

fn weighted_sum(frames: &[Vec<f64>], weights: &[f64], dim: usize) -> Vec<f64> {
    let mut out = vec![0.0; dim];
    for (f, &w) in frames.iter().zip(weights) {
        for (o, x) in out.iter_mut().zip(f) {
            *o += w * x;
        }
    }
    out
}

/// Pairwise cosine similarities of all frames, failing on zero-norm frames.
fn similarity_table(frames: &[Vec<f64>]) -> Result<Vec<Vec<f64>>, CombineError> {
    let units: Vec<Vec<f64>> = frames
        .iter()
        .enumerate()
        .map(|(i, f)| vector::normalized(f).ok_or(CombineError::ZeroNorm(i)))
        .collect::<Result<_, _>>()?;
    let n = units.len();
    let mut sims = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let s = vector::dot(&units[i], &units[j]).clamp(-1.0, 1.0);
            sims[i][j] = s;
            sims[j][i] = s;
        }
    }
    Ok(sims)
}

/// Numerically stable softmax of `scores / tau`.
pub fn softmax_weights(scores: &[f64], tau: f64) -> Result<Vec<f64>, CombineError> {
    check_tau(tau)?;
    if scores.is_empty() {
        return Err(CombineError::NoFrames);
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(CombineError::NonFiniteScore(i));
    }
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| ((s - max) / tau).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

pub fn combine_average(frames: &[Vec<f64>]) -> Result<Combined, CombineError> {
    let dim = check_frames(frames)?;
    let n = frames.len() as f64;
    let mut vector = vec![0.0; dim];
    for f in frames {
        for (o, x) in vector.iter_mut().zip(f) {
            *o += x;
        }
    }
    vector.iter_mut().for_each(|x| *x /= n);
    Ok(Combined {
        vector,
        weights: Vec::new(),
    })
}

/// Embedding of the most confident frame (ties: earliest).
pub fn combine_max_confidence(frames: &[Vec<f64>], confidences: &[Option<f64>]) -> Result<Combined, CombineError> {
    check_frames(frames)?;
    let conf = check_confidences(frames, confidences)?;
    let mut best = 0;
    for (i, &c) in conf.iter().enumerate() {
        if c > conf[best] {
            best = i;
        }
    }
    Ok(Combined {
        vector: frames[best].clone(),
        weights: Vec::new(),
    })
}

/// Per-frame distinctiveness: population variance of a frame's cosine
/// similarities to every other frame.
pub fn diversity_scores(frames: &[Vec<f64>]) -> Result<Vec<f64>, CombineError> {
    check_frames(frames)?;
    let sims = similarity_table(frames)?;
    let n = frames.len();
    if n == 1 {
        return Ok(vec![0.0]);
    }
    Ok((0..n)
        .map(|i| {
            let others = (0..n).filter(|&j| j != i).map(|j| sims[i][j]);
            let m = (n - 1) as f64;
            let mean = others.clone().sum::<f64>() / m;
            others.map(|s| (s - mean) * (s - mean)).sum::<f64>() / m
        })
        .collect())
}

/// Per-frame temporal coherence: mean similarity to the frames in
/// `[i − radius, i + radius]`, truncated at the video ends, excluding `i`.
pub fn coherence_scores(frames: &[Vec<f64>], radius: usize) -> Result<Vec<f64>, CombineError> {
    if radius == 0 {
        return Err(CombineError::InvalidRadius);
    }
    check_frames(frames)?;
    let sims = similarity_table(frames)?;
    let n = frames.len();
    if n == 1 {
        return Ok(vec![1.0]);
    }
    Ok((0..n)
        .map(|i| {
            let lo = i.saturating_sub(radius);
            let hi = (i + radius).min(n - 1);
            let neighbours: Vec<f64> = (lo..=hi).filter(|&j| j != i).map(|j| sims[i][j]).collect();
            neighbours.iter().sum::<f64>() / neighbours.len() as f64
        })
        .collect())
}

fn weighted_from_scores(frames: &[Vec<f64>], scores: &[f64], tau: f64) -> Result<Combined, CombineError> {
    let dim = check_frames(frames)?;
    let weights = softmax_weights(scores, tau)?;
    Ok(Combined {
        vector: weighted_sum(frames, &weights, dim),
        weights,
    })
}

pub fn combine_weighted_diversity(frames: &[Vec<f64>], tau: f64) -> Result<Combined, CombineError> {
    check_tau(tau)?;
    let scores = diversity_scores(frames)?;
    weighted_from_scores(frames, &scores, tau)
}

pub fn combine_weighted_confidence(
    frames: &[Vec<f64>],
    confidences: &[Option<f64>],
    tau: f64,
) -> Result<Combined, CombineError> {
    check_frames(frames)?;
    let conf = check_confidences(frames, confidences)?;
    weighted_from_scores(frames, &conf, tau)
}

pub fn combine_temporal_coherence(frames: &[Vec<f64>], radius: usize, tau: f64) -> Result<Combined, CombineError> {
    check_tau(tau)?;
    let scores = coherence_scores(frames, radius)?;
    weighted_from_scores(frames, &scores, tau)
}

/// Dispatches on `params.method`. `confidences` is only consulted by the
/// confidence-based methods.
pub fn combine(
    frames: &[Vec<f64>],
    confidences: &[Option<f64>],
    params: &CombineParams,
) -> Result<Combined, CombineError> {
    params.validate()?;
    match params.method {
        CombineMethod::Average => combine_average(frames),
        CombineMethod::MaxConfidence => combine_max_confidence(frames, confidences),
        CombineMethod::WeightedDiversity => combine_weighted_diversity(frames, params.tau),
        CombineMethod::WeightedConfidence => combine_weighted_confidence(frames, confidences, params.tau),
        CombineMethod::TemporalCoherence => combine_temporal_coherence(frames, params.radius, params.tau),
    }
}
