//! Cluster quality metrics and clustering comparison.

pub mod compare;
pub mod internal;
pub mod score;
pub mod sizes;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use compare::{
    centroid_similarity, chi_square_temporal, compare_clusterings, overlap_matrix, variation_of_information,
    ComparisonReport,
};
pub use internal::{calinski_harabasz, davies_bouldin, silhouette};
pub use score::{composite_score, CompositeInputs};
pub use sizes::{cluster_stats, clusters_for_coverage, coverage_top, coverage_top10, gini, singleton_ratio, ClusterStats};

use crate::vector;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no items")]
    Empty,
    #[error("cluster sizes must be positive")]
    EmptyCluster,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("vector {index} has a different dimension")]
    DimMismatch { index: usize },
    #[error("need at least two clusters, got {0}")]
    TooFewClusters(usize),
    #[error("centroid of cluster {0} has zero norm")]
    ZeroNormCentroid(usize),
    #[error("vector {0} has zero norm")]
    ZeroNorm(usize),
}

/// Relabels clusters densely in order of first appearance and lists members.
pub fn group(labels: &[usize]) -> (Vec<usize>, Vec<Vec<usize>>) {
    let mut ids: BTreeMap<usize, usize> = BTreeMap::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    let canon = labels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let next = ids.len();
            let id = *ids.entry(l).or_insert(next);
            if id == members.len() {
                members.push(Vec::new());
            }
            members[id].push(i);
            id
        })
        .collect();
    (canon, members)
}

/// Sizes of each cluster, largest first.
pub fn sizes_descending(labels: &[usize]) -> Vec<usize> {
    let (_, members) = group(labels);
    let mut sizes: Vec<usize> = members.iter().map(Vec::len).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n_videos: usize,
    pub n_clusters: usize,
    pub sizes: Vec<usize>,
    pub largest: usize,
    pub mean_size: f64,
    pub median_size: f64,
    pub gini: f64,
    pub top10_coverage: f64,
    pub top20_coverage: f64,
    pub clusters_for_80pct: usize,
    pub singleton_ratio: f64,
    pub silhouette: f64,
    pub davies_bouldin: f64,
    pub calinski_harabasz: f64,
    pub overall: f64,
}

impl MetricsReport {
    pub fn composite_inputs(&self) -> CompositeInputs {
        CompositeInputs {
            silhouette: self.silhouette,
            davies_bouldin: self.davies_bouldin,
            calinski_harabasz: self.calinski_harabasz,
            gini: self.gini,
            top10_coverage: self.top10_coverage,
            singleton_ratio: self.singleton_ratio,
        }
    }
}

/// Full metric report. Vectors are L2-normalized before the geometric
/// indices are computed.
pub fn metrics_report(vectors: &[Vec<f64>], labels: &[usize]) -> Result<MetricsReport, MetricsError> {
    if vectors.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            left: vectors.len(),
            right: labels.len(),
        });
    }
    if vectors.is_empty() {
        return Err(MetricsError::Empty);
    }
    let units: Vec<Vec<f64>> = vectors
        .iter()
        .enumerate()
        .map(|(i, v)| vector::normalized(v).ok_or(MetricsError::ZeroNorm(i)))
        .collect::<Result<_, _>>()?;
    let sizes = sizes_descending(labels);
    let stats = cluster_stats(&sizes)?;
    let mut report = MetricsReport {
        n_videos: vectors.len(),
        n_clusters: sizes.len(),
        largest: stats.largest,
        mean_size: stats.mean,
        median_size: stats.median,
        gini: gini(&sizes)?,
        top10_coverage: coverage_top10(&sizes)?,
        top20_coverage: coverage_top(&sizes, 20)?,
        clusters_for_80pct: clusters_for_coverage(&sizes, 0.8)?,
        singleton_ratio: singleton_ratio(&sizes)?,
        silhouette: silhouette(&units, labels)?,
        davies_bouldin: davies_bouldin(&units, labels)?,
        calinski_harabasz: calinski_harabasz(&units, labels)?,
        overall: 0.0,
        sizes,
    };
    report.overall = composite_score(&report.composite_inputs());
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_relabels_by_first_appearance() {
        let (canon, members) = group(&[7, 3, 7, 9]);
        assert_eq!(canon, vec![0, 1, 0, 2]);
        assert_eq!(members, vec![vec![0, 2], vec![1], vec![3]]);
    }

    #[test]
    fn single_cluster_report() {
        let v = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
        let r = metrics_report(&v, &[0, 0, 0]).unwrap();
        assert_eq!(r.silhouette, -1.0);
        assert_eq!(r.davies_bouldin, 10.0);
        assert_eq!(r.calinski_harabasz, 0.0);
        assert!((r.overall - 0.3).abs() < 1e-12);
    }

    #[test]
    fn zero_vector_rejected() {
        let v = vec![vec![0.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(metrics_report(&v, &[0, 1]), Err(MetricsError::ZeroNorm(0)));
    }
}
