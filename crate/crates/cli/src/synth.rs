//! Planted-partition stores for testing.
//!
//! Each video draws a latent vector from one of `clusters` isotropic
//! Gaussian blobs whose centers share a common component. Its frames add
//! independent noise to that vector. Frame statistics are always valid and
//! thumbnails are random, so the only duplicates are the requested ones.

use std::collections::BTreeMap;

use anyhow::bail;
use chrono::{DateTime, Duration, Utc};
use mcvc_core::embstore::{EmbeddingStore, FrameRecord, VideoEntry};
use mcvc_core::vector;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

/// Source frame rate of generated videos; one frame per second is stored.
const SOURCE_FPS: f64 = 30.0;
const CENTER_ATTEMPTS: usize = 1000;
/// 2019-01-01T00:00:00Z and 2023-01-01T00:00:00Z.
const POSTED_FROM: i64 = 1_546_300_800;
const POSTED_TO: i64 = 1_672_531_200;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub videos: usize,
    pub clusters: usize,
    pub dim: usize,
    /// Per-coordinate standard deviation of video vectors around their blob
    /// center.
    pub sigma: f64,
    /// Per-coordinate standard deviation of frames around their video.
    pub frame_noise: f64,
    /// Per-coordinate standard deviation of a component shared by all blob
    /// centers. Real backbone embeddings are positively correlated overall;
    /// this reproduces that.
    pub shared: f64,
    /// Minimum distance between blob centers, in units of `sigma`.
    pub min_separation: f64,
    pub min_duration: f64,
    pub max_duration: f64,
    /// Extra videos that copy an earlier video's frames, posted a day later.
    pub duplicates: usize,
    pub seed: u64,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            videos: 200,
            clusters: 4,
            dim: 32,
            sigma: 0.3,
            frame_noise: 0.3,
            shared: 1.0,
            min_separation: 6.0,
            min_duration: 6.0,
            max_duration: 30.0,
            duplicates: 0,
            seed: 0,
        }
    }
}

/// Ground truth written next to a synthetic store.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Truth {
    pub clusters: usize,
    /// Smallest distance between blob centers divided by `sigma`.
    pub separation_sigma: f64,
    pub assignments: BTreeMap<String, usize>,
    /// duplicate video_id → copied video_id
    pub duplicates: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub store: EmbeddingStore,
    pub truth: Truth,
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn min_center_distance(centers: &[Vec<f64>]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..centers.len() {
        for j in i + 1..centers.len() {
            best = best.min(vector::distance(&centers[i], &centers[j]));
        }
    }
    best
}

pub fn generate(p: &SynthParams) -> anyhow::Result<Synthetic> {
    if p.videos == 0 || p.clusters == 0 || p.dim == 0 {
        bail!("videos, clusters and dim must be positive");
    }
    if p.clusters > p.videos {
        bail!("{} clusters need at least as many videos, got {}", p.clusters, p.videos);
    }
    if p.duplicates > p.videos {
        bail!("cannot duplicate {} of {} videos", p.duplicates, p.videos);
    }
    if !(p.sigma > 0.0 && p.frame_noise >= 0.0 && p.shared >= 0.0) {
        bail!("sigma must be positive, frame_noise and shared non-negative");
    }
    if !(p.min_duration >= 1.0 && p.max_duration > p.min_duration) {
        bail!("need 1 <= min_duration < max_duration");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let common = gaussian(&mut rng, p.dim, p.shared);

    let mut centers = Vec::new();
    let mut separation = 0.0;
    for attempt in 0.. {
        if attempt == CENTER_ATTEMPTS {
            bail!("could not place {} centers {}σ apart in {} dimensions", p.clusters, p.min_separation, p.dim);
        }
        centers = (0..p.clusters)
            .map(|_| {
                let offset = gaussian(&mut rng, p.dim, 1.0);
                common.iter().zip(offset).map(|(c, o)| c + o).collect()
            })
            .collect();
        separation = if p.clusters == 1 {
            f64::INFINITY
        } else {
            min_center_distance(&centers) / p.sigma
        };
        if separation >= p.min_separation {
            break;
        }
    }

    let mut blob: Vec<usize> = (0..p.videos).map(|i| i % p.clusters).collect();
    blob.shuffle(&mut rng);

    let mut manifest = Vec::with_capacity(p.videos + p.duplicates);
    let mut matrix: Vec<f32> = Vec::new();
    let mut assignments = BTreeMap::new();
    let mut next_row = 0u32;
    for (i, &b) in blob.iter().enumerate() {
        let video_id = format!("v{i:05}");
        let latent: Vec<f64> = centers[b]
            .iter()
            .zip(gaussian(&mut rng, p.dim, p.sigma))
            .map(|(c, z)| c + z)
            .collect();
        let duration_s = rng.random_range(p.min_duration..p.max_duration);
        let stored = duration_s.floor() as u64;
        let mut frames = Vec::with_capacity(stored as usize);
        for t in 0..stored {
            for (x, z) in latent.iter().zip(gaussian(&mut rng, p.dim, p.frame_noise)) {
                matrix.push((x + z) as f32);
            }
            let mut luma8x8 = [0u8; 64];
            rng.fill(&mut luma8x8[..]);
            frames.push(FrameRecord {
                index: t * SOURCE_FPS as u64,
                timestamp_s: t as f64,
                embedding_row: next_row,
                gray_std: rng.random_range(20.0..80.0),
                brightness: rng.random_range(30.0..220.0),
                confidence: Some(rng.random_range(0.05..0.99)),
                luma8x8,
            });
            next_row += 1;
        }
        let posted = rng.random_range(POSTED_FROM..POSTED_TO);
        manifest.push(VideoEntry {
            video_id: video_id.clone(),
            posted_at: DateTime::<Utc>::from_timestamp(posted, 0).expect("timestamp in range"),
            duration_s,
            frame_count_total: (duration_s * SOURCE_FPS).floor() as u64,
            frames,
        });
        assignments.insert(video_id, b);
    }

    let mut duplicates = BTreeMap::new();
    for d in 0..p.duplicates {
        let source = manifest[d].clone();
        let mut copy = source.clone();
        copy.video_id = format!("{}-dup", source.video_id);
        copy.posted_at = source.posted_at + Duration::days(1);
        for f in &mut copy.frames {
            let start = f.embedding_row as usize * p.dim;
            let row: Vec<f32> = matrix[start..start + p.dim].to_vec();
            matrix.extend_from_slice(&row);
            f.embedding_row = next_row;
            next_row += 1;
        }
        assignments.insert(copy.video_id.clone(), assignments[&source.video_id]);
        duplicates.insert(copy.video_id.clone(), source.video_id.clone());
        manifest.push(copy);
    }

    Ok(Synthetic {
        store: EmbeddingStore {
            manifest,
            dim: p.dim,
            matrix,
            backbone_tag: "synthetic".to_owned(),
        },
        truth: Truth {
            clusters: p.clusters,
            separation_sigma: separation,
            assignments,
            duplicates,
        },
    })
}
