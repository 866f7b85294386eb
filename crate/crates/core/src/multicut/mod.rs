//! Minimum-cost multicut on complete graphs.
//!
//! Solutions are represented as node partitions ([`Clustering`]); the cut
//! set is every edge whose endpoints carry different labels, so the cycle
//! consistency constraints hold for every labelling by construction. The
//! objective to minimize is the summed cost of cut edges.
//!
//! Solvers:
//! - [`gaec`]: greedy additive edge contraction from singletons.
//! - [`klj_refine`]: Kernighan–Lin style local search with joins.
//! - [`solve`]: `gaec` followed by `klj_refine`.
//! - [`brute_force`]: exhaustive enumeration for `n ≤ 10`, used as an oracle.

mod exact;
mod gaec;
mod klj;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::simgraph::CostGraph;

pub use exact::{brute_force, BRUTE_FORCE_MAX_NODES};
pub use gaec::gaec;
pub use klj::klj_refine;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MulticutError {
    #[error("clustering has {clustering} nodes but the graph has {graph}")]
    SizeMismatch { clustering: usize, graph: usize },
    #[error("brute force supports at most {max} nodes, got {n}")]
    TooLarge { n: usize, max: usize },
}

/// Node partition with canonical labels: clusters are numbered 0, 1, … in
/// order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "Vec<usize>", from = "Vec<usize>")]
pub struct Clustering {
    labels: Vec<usize>,
}

impl From<Vec<usize>> for Clustering {
    fn from(labels: Vec<usize>) -> Self {
        Self::from_labels(&labels)
    }
}

impl From<Clustering> for Vec<usize> {
    fn from(c: Clustering) -> Self {
        c.labels
    }
}

impl Clustering {
    /// Canonicalizes arbitrary labels.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map = std::collections::HashMap::new();
        let labels = labels
            .iter()
            .map(|&l| {
                let next = map.len();
                *map.entry(l).or_insert(next)
            })
            .collect();
        Self { labels }
    }

    pub fn singletons(n: usize) -> Self {
        Self { labels: (0..n).collect() }
    }

    pub fn one_cluster(n: usize) -> Self {
        Self { labels: vec![0; n] }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn n_clusters(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    /// Sizes indexed by cluster id.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_clusters()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Members of each cluster, ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_clusters()];
        for (node, &l) in self.labels.iter().enumerate() {
            out[l].push(node);
        }
        out
    }

    pub fn same_cluster(&self, u: usize, v: usize) -> bool {
        self.labels[u] == self.labels[v]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverTag {
    #[serde(rename = "gaec")]
    Gaec,
    #[serde(rename = "klj")]
    Klj,
    #[serde(rename = "gaec+klj")]
    GaecKlj,
    #[serde(rename = "exact")]
    Exact,
}

impl fmt::Display for SolverTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Gaec => "gaec",
            Self::Klj => "klj",
            Self::GaecKlj => "gaec+klj",
            Self::Exact => "exact",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub clustering: Clustering,
    /// Summed cost of cut edges.
    pub objective: f64,
    pub solver: SolverTag,
    /// Contractions for GAEC, applied moves for KLj, partitions visited for
    /// brute force.
    pub iterations: usize,
}

/// Summed cost of the edges cut by `clustering`.
pub fn objective(graph: &CostGraph, clustering: &Clustering) -> Result<f64, MulticutError> {
    let n = graph.n();
    if clustering.n() != n {
        return Err(MulticutError::SizeMismatch {
            clustering: clustering.n(),
            graph: n,
        });
    }
    let labels = clustering.labels();
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            if labels[i] != labels[j] {
                total += graph.cost(i, j);
            }
        }
    }
    Ok(total)
}

/// GAEC followed by KLj refinement.
pub fn solve(graph: &CostGraph) -> SolveResult {
    let greedy = gaec(graph);
    let mut refined = klj_refine(graph, &greedy.clustering).expect("gaec output matches graph size");
    refined.solver = SolverTag::GaecKlj;
    refined.iterations += greedy.iterations;
    refined
}
