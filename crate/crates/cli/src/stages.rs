//! Pipeline stages. Each consumes only the artifacts of earlier stages.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context};
use mcvc_core::combine::{combine, CombineParams};
use mcvc_core::dedup::{dedup_videos, DedupReport};
use mcvc_core::embstore::{read_store, EmbeddingStore};
use mcvc_core::frameselect::{plan_video, SelectionMode, SelectionParams, SelectionPlan};
use mcvc_core::metrics::{compare_clusterings, metrics_report, ComparisonReport, MetricsReport};
use mcvc_core::multicut::{brute_force, gaec, solve, SolveResult};
use mcvc_core::simgraph::{calibrate, cosine_matrix, CostGraph, SimilarityMatrix};
use mcvc_core::vector;
use rayon::prelude::*;

use crate::artifacts::{ClustersFile, VideoVecEntry, VideoVectors};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    LoadStore,
    Dedup,
    Select,
    Combine,
    Graph,
    Cluster,
    Metrics,
    Compare,
}

impl Stage {
    pub fn number(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::LoadStore => "load store",
            Self::Dedup => "dedup",
            Self::Select => "select",
            Self::Combine => "combine",
            Self::Graph => "graph",
            Self::Cluster => "cluster",
            Self::Metrics => "metrics",
            Self::Compare => "compare",
        }
    }

    /// Runs `f`, tagging any error with this stage.
    pub fn run<T>(self, f: impl FnOnce() -> anyhow::Result<T>) -> anyhow::Result<T> {
        f().with_context(|| self.to_string())
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage {} ({})", self.number(), self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverChoice {
    Gaec,
    #[default]
    GaecKlj,
    Exact,
}

impl FromStr for SolverChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gaec" => Ok(Self::Gaec),
            "gaec+klj" => Ok(Self::GaecKlj),
            "exact" => Ok(Self::Exact),
            other => Err(format!("unknown solver {other:?} (expected gaec|gaec+klj|exact)")),
        }
    }
}

pub fn load_store(dir: &Path) -> anyhow::Result<EmbeddingStore> {
    if !dir.is_dir() {
        bail!("store directory {} does not exist", dir.display());
    }
    Ok(read_store(dir)?)
}

pub fn dedup(store: &EmbeddingStore, black_threshold: f64) -> anyhow::Result<DedupReport> {
    Ok(dedup_videos(&store.manifest, black_threshold)?)
}

/// Plans every video, skipping duplicates named in `dedup`.
pub fn select(
    store: &EmbeddingStore,
    mode: SelectionMode,
    params: &SelectionParams,
    dedup: Option<&DedupReport>,
) -> anyhow::Result<Vec<SelectionPlan>> {
    params.validate()?;
    let videos: Vec<_> = store
        .manifest
        .iter()
        .filter(|v| dedup.is_none_or(|d| !d.is_duplicate(&v.video_id)))
        .collect();
    videos
        .par_iter()
        .map(|v| plan_video(v, store, mode, params).with_context(|| format!("video {}", v.video_id)))
        .collect()
}

/// Pools each plan's frames into one vector. Plans without frames are left
/// out.
pub fn combine_plans(
    store: &EmbeddingStore,
    plans: &[SelectionPlan],
    params: &CombineParams,
) -> anyhow::Result<VideoVectors> {
    params.validate()?;
    let by_id: HashMap<&str, _> = store.manifest.iter().map(|v| (v.video_id.as_str(), v)).collect();
    let pooled: Vec<Option<(VideoVecEntry, Vec<f64>)>> = plans
        .par_iter()
        .map(|plan| {
            if plan.indices.is_empty() {
                return Ok(None);
            }
            let video = by_id
                .get(plan.video_id.as_str())
                .with_context(|| format!("plan names unknown video {}", plan.video_id))?;
            let mut frames = Vec::with_capacity(plan.indices.len());
            let mut confidences = Vec::with_capacity(plan.indices.len());
            for &idx in &plan.indices {
                let pos = video
                    .frames
                    .binary_search_by_key(&idx, |f| f.index)
                    .map_err(|_| anyhow::anyhow!("video {} has no frame {idx}", plan.video_id))?;
                let rec = &video.frames[pos];
                frames.push(vector::to_f64(store.embedding(rec.embedding_row)));
                confidences.push(rec.confidence);
            }
            let out = combine(&frames, &confidences, params).with_context(|| format!("video {}", plan.video_id))?;
            Ok(Some((
                VideoVecEntry {
                    video_id: plan.video_id.clone(),
                    posted_at: video.posted_at,
                    method: params.method,
                    weights: out.weights,
                },
                out.vector,
            )))
        })
        .collect::<anyhow::Result<_>>()?;
    let (entries, vectors) = pooled.into_iter().flatten().unzip();
    Ok(VideoVectors {
        dim: store.dim,
        entries,
        vectors,
    })
}

pub fn similarities(vv: &VideoVectors) -> anyhow::Result<SimilarityMatrix> {
    Ok(cosine_matrix(&vv.vectors)?)
}

pub fn graph(vv: &VideoVectors, cal: f64) -> anyhow::Result<CostGraph> {
    Ok(calibrate(&similarities(vv)?, cal)?)
}

pub fn cluster(graph: &CostGraph, solver: SolverChoice) -> anyhow::Result<SolveResult> {
    Ok(match solver {
        SolverChoice::Gaec => gaec(graph),
        SolverChoice::GaecKlj => solve(graph),
        SolverChoice::Exact => brute_force(graph)?,
    })
}

pub fn metrics(vv: &VideoVectors, clusters: &ClustersFile) -> anyhow::Result<MetricsReport> {
    let labels = clusters.labels_for(&vv.ids())?;
    Ok(metrics_report(&vv.vectors, &labels)?)
}

/// Compares two clusterings of the same videos. `vv_b` supplies the vectors
/// for the second clustering and may come from another embedding space.
pub fn compare(
    vv_a: &VideoVectors,
    vv_b: &VideoVectors,
    a: &ClustersFile,
    b: &ClustersFile,
) -> anyhow::Result<ComparisonReport> {
    let ids = vv_a.ids();
    let ids_b: BTreeSet<&str> = vv_b.entries.iter().map(|e| e.video_id.as_str()).collect();
    if ids_b.len() != ids.len() || ids.iter().any(|id| !ids_b.contains(id.as_str())) {
        bail!("the two video vector sets cover different videos");
    }
    let pos_b: HashMap<&str, usize> = vv_b
        .entries
        .iter()
        .enumerate()
        .map(|(i, e)| (e.video_id.as_str(), i))
        .collect();
    let vectors_b: Vec<Vec<f64>> = ids.iter().map(|id| vv_b.vectors[pos_b[id.as_str()]].clone()).collect();
    let labels_a = a.labels_for(&ids)?;
    let labels_b = b.labels_for(&ids)?;
    Ok(compare_clusterings(
        &vv_a.vectors,
        &labels_a,
        &vectors_b,
        &labels_b,
        &vv_a.years(),
    )?)
}
