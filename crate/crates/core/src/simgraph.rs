//! Similarity graph construction and cost calibration.
//!
//! [`cosine_matrix`] builds the dense pairwise cosine-similarity matrix over
//! video vectors. A [`Calibration`] maps each similarity to a signed edge cost
//! of the complete [`CostGraph`]: positive costs are attractive (the multicut
//! prefers to keep the edge), negative costs are repulsive.
//!
//! Graph file layout: magic `MCGW`, `u32` node count `n`, then the
//! `n(n−1)/2` costs as little-endian `f32` in row-major upper-triangular
//! order `(0,1), (0,2), …, (0,n−1), (1,2), …`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::vector;

pub const GRAPH_MAGIC: [u8; 4] = *b"MCGW";

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("vector {0} has zero norm")]
    ZeroNorm(usize),
    #[error("vector {index} has dimension {found}, expected {expected}")]
    DimMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("calibration term must lie strictly between 0 and 1, got {0}")]
    InvalidCalibration(f64),
    #[error("edge cost for ({0}, {1}) is not finite")]
    NonFiniteCost(usize, usize),
    #[error("expected {expected} edge costs for {n} nodes, got {found}")]
    CostCount { n: usize, expected: usize, found: usize },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed graph file: {detail}")]
    Format { path: PathBuf, detail: String },
}

/// Position of edge `(i, j)`, `i < j < n`, in upper-triangular row-major order.
#[inline]
pub fn edge_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

pub fn edge_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

/// Dense symmetric cosine-similarity matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

/// Pairwise cosine similarities. Each unordered pair is computed once and
/// mirrored, so the result is exactly symmetric.
pub fn cosine_matrix(vectors: &[Vec<f64>]) -> Result<SimilarityMatrix, GraphError> {
    let n = vectors.len();
    let dim = vectors.first().map_or(0, Vec::len);
    let units: Vec<Vec<f64>> = vectors
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if v.len() != dim {
                return Err(GraphError::DimMismatch {
                    index: i,
                    expected: dim,
                    found: v.len(),
                });
            }
            vector::normalized(v).ok_or(GraphError::ZeroNorm(i))
        })
        .collect::<Result<_, _>>()?;

    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| vector::dot(&units[i], &units[j]).clamp(-1.0, 1.0))
                .collect()
        })
        .collect();

    let mut values = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        values[i * n + i] = 1.0;
        for (k, &s) in row.iter().enumerate() {
            let j = i + 1 + k;
            values[i * n + j] = s;
            values[j * n + i] = s;
        }
    }
    Ok(SimilarityMatrix { n, values })
}

/// Similarity-to-cost transform.
pub trait Calibration {
    fn cost(&self, similarity: f64, cal: f64) -> f64;
}

/// `w = s − (1 − cal)`: similarities above `1 − cal` become attractive.
#[derive(Debug, Clone, Copy, Default)]
pub struct ShiftCalibration;

impl Calibration for ShiftCalibration {
    fn cost(&self, similarity: f64, cal: f64) -> f64 {
        similarity - (1.0 - cal)
    }
}

/// Complete graph with signed edge costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CostGraph {
    n: usize,
    costs: Vec<f64>,
    cal: Option<f64>,
}

impl CostGraph {
    /// Builds a graph from upper-triangular costs.
    pub fn from_costs(n: usize, costs: Vec<f64>) -> Result<Self, GraphError> {
        let expected = edge_count(n);
        if costs.len() != expected {
            return Err(GraphError::CostCount {
                n,
                expected,
                found: costs.len(),
            });
        }
        let graph = Self { n, costs, cal: None };
        for i in 0..n {
            for j in i + 1..n {
                if !graph.cost(i, j).is_finite() {
                    return Err(GraphError::NonFiniteCost(i, j));
                }
            }
        }
        Ok(graph)
    }

    /// Builds a graph by evaluating `f(i, j)` for every `i < j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, GraphError> {
        let mut costs = Vec::with_capacity(edge_count(n));
        for i in 0..n {
            for j in i + 1..n {
                costs.push(f(i, j));
            }
        }
        Self::from_costs(n, costs)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cal(&self) -> Option<f64> {
        self.cal
    }

    /// Cost of edge `{u, v}`; order does not matter. `u == v` yields 0.
    #[inline]
    pub fn cost(&self, u: usize, v: usize) -> f64 {
        match u.cmp(&v) {
            std::cmp::Ordering::Less => self.costs[edge_index(self.n, u, v)],
            std::cmp::Ordering::Greater => self.costs[edge_index(self.n, v, u)],
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    /// Upper-triangular costs in file order.
    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn max_abs_cost(&self) -> f64 {
        self.costs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Costs rounded to the `f32` precision of the graph file, so that an
    /// in-memory graph solves exactly like one read back from disk.
    pub fn quantized(&self) -> Self {
        Self {
            n: self.n,
            costs: self.costs.iter().map(|&c| c as f32 as f64).collect(),
            cal: self.cal,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), GraphError> {
        let io = |source| GraphError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut out = BufWriter::new(fs::File::create(path).map_err(io)?);
        out.write_all(&GRAPH_MAGIC).map_err(io)?;
        out.write_all(&(self.n as u32).to_le_bytes()).map_err(io)?;
        for &c in &self.costs {
            out.write_all(&(c as f32).to_le_bytes()).map_err(io)?;
        }
        out.flush().map_err(io)
    }

    pub fn read(path: &Path) -> Result<Self, GraphError> {
        let raw = fs::read(path).map_err(|source| GraphError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let bad = |detail: String| GraphError::Format {
            path: path.to_path_buf(),
            detail,
        };
        if raw.len() < 8 {
            return Err(bad(format!("{} bytes is shorter than the header", raw.len())));
        }
        if raw[0..4] != GRAPH_MAGIC {
            return Err(bad(format!("bad magic {:?}", &raw[0..4])));
        }
        let n = u32::from_le_bytes(raw[4..8].try_into().unwrap()) as usize;
        let expected = 8 + 4 * edge_count(n);
        if raw.len() != expected {
            return Err(bad(format!("{n} nodes need {expected} bytes, file has {}", raw.len())));
        }
        let costs = raw[8..]
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect();
        Self::from_costs(n, costs)
    }
}

/// Applies `calibration` to every edge of `sims`.
pub fn calibrate_with(
    sims: &SimilarityMatrix,
    cal: f64,
    calibration: &impl Calibration,
) -> Result<CostGraph, GraphError> {
    if !(cal > 0.0 && cal < 1.0) {
        return Err(GraphError::InvalidCalibration(cal));
    }
    let mut graph = CostGraph::from_fn(sims.n(), |i, j| calibration.cost(sims.get(i, j), cal))?;
    graph.cal = Some(cal);
    Ok(graph)
}

/// Calibrates with the default shift transform `w = s − (1 − cal)`.
pub fn calibrate(sims: &SimilarityMatrix, cal: f64) -> Result<CostGraph, GraphError> {
    calibrate_with(sims, cal, &ShiftCalibration)
}
