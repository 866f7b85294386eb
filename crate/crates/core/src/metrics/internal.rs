//! Internal validity indices: silhouette, Davies–Bouldin, Calinski–Harabasz.
//!
//! All three use Euclidean distance on the vectors exactly as given. The
//! report builder in the parent module L2-normalizes video vectors first.
//!
//! Degenerate cases use fixed sentinels: a single cluster scores silhouette
//! −1, Davies–Bouldin 10 and Calinski–Harabasz 0. Unbounded ratios are
//! capped at [`LARGE_SENTINEL`].

use rayon::prelude::*;

use super::{group, MetricsError};
use crate::vector;

pub const SILHOUETTE_SINGLE_CLUSTER: f64 = -1.0;
pub const DAVIES_BOULDIN_SINGLE_CLUSTER: f64 = 10.0;
pub const CALINSKI_HARABASZ_DEGENERATE: f64 = 0.0;
pub const LARGE_SENTINEL: f64 = 1e12;

fn check_dims(vectors: &[Vec<f64>], labels: &[usize]) -> Result<usize, MetricsError> {
    if vectors.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            left: vectors.len(),
            right: labels.len(),
        });
    }
    if vectors.is_empty() {
        return Err(MetricsError::Empty);
    }
    let dim = vectors[0].len();
    if let Some(i) = vectors.iter().position(|v| v.len() != dim) {
        return Err(MetricsError::DimMismatch { index: i });
    }
    Ok(dim)
}

fn centroids(vectors: &[Vec<f64>], members: &[Vec<usize>], dim: usize) -> Vec<Vec<f64>> {
    members
        .iter()
        .map(|m| {
            let mut c = vec![0.0; dim];
            for &i in m {
                for (acc, x) in c.iter_mut().zip(&vectors[i]) {
                    *acc += x;
                }
            }
            c.iter_mut().for_each(|x| *x /= m.len() as f64);
            c
        })
        .collect()
}

/// Mean silhouette coefficient. Points in singleton clusters score 0.
pub fn silhouette(vectors: &[Vec<f64>], labels: &[usize]) -> Result<f64, MetricsError> {
    check_dims(vectors, labels)?;
    let (canon, members) = group(labels);
    let k = members.len();
    if k == 1 {
        return Ok(SILHOUETTE_SINGLE_CLUSTER);
    }
    let scores: Vec<f64> = (0..vectors.len())
        .into_par_iter()
        .map(|i| {
            let own = canon[i];
            if members[own].len() == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for (j, v) in vectors.iter().enumerate() {
                if j != i {
                    sums[canon[j]] += vector::distance(&vectors[i], v);
                }
            }
            let a = sums[own] / (members[own].len() - 1) as f64;
            let b = (0..k)
                .filter(|&c| c != own)
                .map(|c| sums[c] / members[c].len() as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom > 0.0 {
                (b - a) / denom
            } else {
                0.0
            }
        })
        .collect();
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}

/// Davies–Bouldin index `(1/k) Σᵢ maxⱼ (sᵢ + sⱼ) / dᵢⱼ`.
pub fn davies_bouldin(vectors: &[Vec<f64>], labels: &[usize]) -> Result<f64, MetricsError> {
    let dim = check_dims(vectors, labels)?;
    let (_, members) = group(labels);
    let k = members.len();
    if k == 1 {
        return Ok(DAVIES_BOULDIN_SINGLE_CLUSTER);
    }
    let cents = centroids(vectors, &members, dim);
    let spread: Vec<f64> = members
        .iter()
        .zip(&cents)
        .map(|(m, c)| m.iter().map(|&i| vector::distance(&vectors[i], c)).sum::<f64>() / m.len() as f64)
        .collect();
    let mut total = 0.0;
    for i in 0..k {
        let worst = (0..k)
            .filter(|&j| j != i)
            .map(|j| {
                let num = spread[i] + spread[j];
                let d = vector::distance(&cents[i], &cents[j]);
                if d > 0.0 {
                    num / d
                } else if num > 0.0 {
                    LARGE_SENTINEL
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max);
        total += worst;
    }
    Ok((total / k as f64).min(LARGE_SENTINEL))
}

/// Calinski–Harabasz index `[tr(B)/(k−1)] / [tr(W)/(n−k)]`.
pub fn calinski_harabasz(vectors: &[Vec<f64>], labels: &[usize]) -> Result<f64, MetricsError> {
    let dim = check_dims(vectors, labels)?;
    let (_, members) = group(labels);
    let n = vectors.len();
    let k = members.len();
    if k < 2 || k >= n {
        return Ok(CALINSKI_HARABASZ_DEGENERATE);
    }
    let everyone: Vec<usize> = (0..n).collect();
    let grand = &centroids(vectors, std::slice::from_ref(&everyone), dim)[0];
    let cents = centroids(vectors, &members, dim);
    let between: f64 = members
        .iter()
        .zip(&cents)
        .map(|(m, c)| m.len() as f64 * vector::squared_distance(c, grand))
        .sum();
    let within: f64 = members
        .iter()
        .zip(&cents)
        .map(|(m, c)| m.iter().map(|&i| vector::squared_distance(&vectors[i], c)).sum::<f64>())
        .sum();
    if between == 0.0 {
        return Ok(CALINSKI_HARABASZ_DEGENERATE);
    }
    if within == 0.0 {
        return Ok(LARGE_SENTINEL);
    }
    let value = (between / (k - 1) as f64) / (within / (n - k) as f64);
    Ok(value.min(LARGE_SENTINEL))
}
