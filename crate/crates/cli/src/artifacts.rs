//! Files exchanged between stages.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use chrono::{DateTime, Datelike, Utc};
use mcvc_core::combine::CombineMethod;
use mcvc_core::embstore::{read_matrix, write_matrix};
use mcvc_core::multicut::{SolveResult, SolverTag};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const DEDUP_FILE: &str = "dedup.json";
pub const PLANS_FILE: &str = "plans.json";
pub const VIDEOVECS_FILE: &str = "videovecs.bin";
pub const GRAPH_FILE: &str = "graph.bin";
pub const CLUSTERS_FILE: &str = "clusters.json";
pub const REPORT_FILE: &str = "report.json";
pub const SWEEP_DIR: &str = "sweep";
pub const SWEEP_JSON: &str = "sweep.json";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const CONFIG_FILE: &str = "config.toml";

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// One line of the video-level manifest next to `videovecs.bin`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoVecEntry {
    pub video_id: String,
    pub posted_at: DateTime<Utc>,
    pub method: CombineMethod,
    /// Frame weights used by the weighted methods.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weights: Vec<f64>,
}

/// Video vectors in the embedding matrix format plus a JSON-lines manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoVectors {
    pub dim: usize,
    pub entries: Vec<VideoVecEntry>,
    pub vectors: Vec<Vec<f64>>,
}

impl VideoVectors {
    /// `videovecs.bin` → `videovecs.jsonl`.
    pub fn manifest_path(matrix: &Path) -> PathBuf {
        matrix.with_extension("jsonl")
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        let flat: Vec<f32> = self.vectors.iter().flatten().map(|&x| x as f32).collect();
        write_matrix(path, self.dim, &flat)?;
        let mpath = Self::manifest_path(path);
        let io = || format!("writing {}", mpath.display());
        let mut out = BufWriter::new(fs::File::create(&mpath).with_context(io)?);
        for e in &self.entries {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n").with_context(io)?;
        }
        out.flush().with_context(io)
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let (rows, dim, flat) = read_matrix(path)?;
        let mpath = Self::manifest_path(path);
        let file = fs::File::open(&mpath).with_context(|| format!("opening {}", mpath.display()))?;
        let mut entries = Vec::with_capacity(rows);
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            entries.push(
                serde_json::from_str(&line).with_context(|| format!("{} line {}", mpath.display(), i + 1))?,
            );
        }
        if entries.len() != rows {
            bail!("{} lists {} videos but {} has {rows} rows", mpath.display(), entries.len(), path.display());
        }
        let vectors = if dim == 0 {
            vec![Vec::new(); rows]
        } else {
            flat.chunks_exact(dim).map(|r| r.iter().map(|&x| x as f64).collect()).collect()
        };
        Ok(Self { dim, entries, vectors })
    }

    pub fn ids(&self) -> Vec<String> {
        self.entries.iter().map(|e| e.video_id.clone()).collect()
    }

    pub fn years(&self) -> Vec<i32> {
        self.entries.iter().map(|e| e.posted_at.year()).collect()
    }
}

/// Solver output keyed by video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClustersFile {
    pub assignments: BTreeMap<String, usize>,
    /// Cluster sizes, largest first.
    pub sizes: Vec<usize>,
    pub n_clusters: usize,
    pub objective: f64,
    pub solver: SolverTag,
    pub iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cal: Option<f64>,
}

impl ClustersFile {
    /// `ids[i]` names graph node `i`.
    pub fn new(ids: &[String], result: &SolveResult, cal: Option<f64>) -> anyhow::Result<Self> {
        let labels = result.clustering.labels();
        if ids.len() != labels.len() {
            bail!("{} video ids for a graph with {} nodes", ids.len(), labels.len());
        }
        let mut assignments = BTreeMap::new();
        for (id, &l) in ids.iter().zip(labels) {
            if assignments.insert(id.clone(), l).is_some() {
                bail!("duplicate video id {id}");
            }
        }
        let mut sizes = result.clustering.sizes();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        Ok(Self {
            assignments,
            n_clusters: sizes.len(),
            sizes,
            objective: result.objective,
            solver: result.solver,
            iterations: result.iterations,
            cal,
        })
    }

    /// Labels in the order of `ids`.
    pub fn labels_for(&self, ids: &[String]) -> anyhow::Result<Vec<usize>> {
        if ids.len() != self.assignments.len() {
            bail!("clustering covers {} videos, expected {}", self.assignments.len(), ids.len());
        }
        ids.iter()
            .map(|id| {
                self.assignments
                    .get(id)
                    .copied()
                    .with_context(|| format!("video {id} has no cluster assignment"))
            })
            .collect()
    }
}
