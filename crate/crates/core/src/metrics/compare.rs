//! Comparing clusterings: temporal chi-square, centroid similarity,
//! variation of information and cluster overlap.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::MetricsError;
use crate::vector;

/// Share above which a cluster counts as concentrated in one year.
pub const CONCENTRATION_THRESHOLD: f64 = 0.5;
/// Centroid cosine similarity above which two clusters are merge candidates.
pub const MERGE_THRESHOLD: f64 = 0.9;

fn same_len(a: usize, b: usize) -> Result<(), MetricsError> {
    if a != b {
        return Err(MetricsError::LengthMismatch { left: a, right: b });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YearConcentration {
    pub cluster: usize,
    pub size: usize,
    pub top_year: i32,
    pub share: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChiSquareReport {
    /// Pearson statistic; `None` with fewer than two clusters or years.
    pub statistic: Option<f64>,
    pub degrees_of_freedom: usize,
    pub years: Vec<i32>,
    pub concentrations: Vec<YearConcentration>,
}

/// Pearson chi-square over the cluster × year contingency table (no
/// continuity correction), plus per-cluster year concentration.
pub fn chi_square_temporal(labels: &[usize], years: &[i32]) -> Result<ChiSquareReport, MetricsError> {
    same_len(labels.len(), years.len())?;
    if labels.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut table: BTreeMap<usize, BTreeMap<i32, usize>> = BTreeMap::new();
    for (&l, &y) in labels.iter().zip(years) {
        *table.entry(l).or_default().entry(y).or_default() += 1;
    }
    let year_list: Vec<i32> = years.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let mut year_totals: BTreeMap<i32, usize> = BTreeMap::new();
    for &y in years {
        *year_totals.entry(y).or_default() += 1;
    }
    let n = labels.len() as f64;

    let concentrations = table
        .iter()
        .map(|(&cluster, row)| {
            let size: usize = row.values().sum();
            // ties go to the earliest year
            let (&top_year, &count) = row
                .iter()
                .fold(None::<(&i32, &usize)>, |best, cur| match best {
                    Some(b) if b.1 >= cur.1 => Some(b),
                    _ => Some(cur),
                })
                .expect("rows are non-empty");
            let share = count as f64 / size as f64;
            YearConcentration {
                cluster,
                size,
                top_year,
                share,
                flagged: share > CONCENTRATION_THRESHOLD,
            }
        })
        .collect();

    let rows = table.len();
    let cols = year_list.len();
    let statistic = (rows >= 2 && cols >= 2).then(|| {
        let mut chi = 0.0;
        for row in table.values() {
            let row_total: usize = row.values().sum();
            for y in &year_list {
                let observed = row.get(y).copied().unwrap_or(0) as f64;
                let expected = row_total as f64 * year_totals[y] as f64 / n;
                chi += (observed - expected).powi(2) / expected;
            }
        }
        chi
    });

    Ok(ChiSquareReport {
        statistic,
        degrees_of_freedom: rows.saturating_sub(1) * cols.saturating_sub(1),
        years: year_list,
        concentrations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergeCandidate {
    pub a: usize,
    pub b: usize,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CentroidSimilarity {
    /// Cluster labels, ascending; rows and columns of `matrix` follow it.
    pub clusters: Vec<usize>,
    pub matrix: Vec<Vec<f64>>,
    pub merge_candidates: Vec<MergeCandidate>,
    pub mean_off_diagonal: f64,
    pub max_off_diagonal: f64,
}

/// Cosine similarity between every pair of cluster centroids.
pub fn centroid_similarity(vectors: &[Vec<f64>], labels: &[usize]) -> Result<CentroidSimilarity, MetricsError> {
    same_len(vectors.len(), labels.len())?;
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        groups.entry(l).or_default().push(i);
    }
    if groups.len() < 2 {
        return Err(MetricsError::TooFewClusters(groups.len()));
    }
    let dim = vectors[0].len();
    let clusters: Vec<usize> = groups.keys().copied().collect();
    let units: Vec<Vec<f64>> = groups
        .iter()
        .map(|(&label, members)| {
            let mut c = vec![0.0; dim];
            for &i in members {
                if vectors[i].len() != dim {
                    return Err(MetricsError::DimMismatch { index: i });
                }
                for (acc, x) in c.iter_mut().zip(&vectors[i]) {
                    *acc += x;
                }
            }
            c.iter_mut().for_each(|x| *x /= members.len() as f64);
            vector::normalized(&c).ok_or(MetricsError::ZeroNormCentroid(label))
        })
        .collect::<Result<_, _>>()?;

    let k = clusters.len();
    let mut matrix = vec![vec![1.0; k]; k];
    let mut merge_candidates = Vec::new();
    let mut off_sum = 0.0;
    let mut off_max = f64::NEG_INFINITY;
    for i in 0..k {
        for j in i + 1..k {
            let s = vector::dot(&units[i], &units[j]).clamp(-1.0, 1.0);
            matrix[i][j] = s;
            matrix[j][i] = s;
            off_sum += s;
            off_max = off_max.max(s);
            if s > MERGE_THRESHOLD {
                merge_candidates.push(MergeCandidate {
                    a: clusters[i],
                    b: clusters[j],
                    similarity: s,
                });
            }
        }
    }
    Ok(CentroidSimilarity {
        clusters,
        matrix,
        merge_candidates,
        mean_off_diagonal: off_sum / (k * (k - 1) / 2) as f64,
        max_off_diagonal: off_max,
    })
}

fn joint_counts(a: &[usize], b: &[usize]) -> (BTreeMap<(usize, usize), usize>, BTreeMap<usize, usize>, BTreeMap<usize, usize>) {
    let mut joint = BTreeMap::new();
    let mut ca = BTreeMap::new();
    let mut cb = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_insert(0) += 1;
        *ca.entry(x).or_insert(0) += 1;
        *cb.entry(y).or_insert(0) += 1;
    }
    (joint, ca, cb)
}

/// Variation of information `H(A) + H(B) − 2 I(A; B)` in nats.
pub fn variation_of_information(a: &[usize], b: &[usize]) -> Result<f64, MetricsError> {
    same_len(a.len(), b.len())?;
    if a.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = a.len() as f64;
    let (joint, ca, cb) = joint_counts(a, b);
    // Σ p(x,y) [ln(p(x)/p(x,y)) + ln(p(y)/p(x,y))]; every term is ≥ 0
    let mut terms: Vec<f64> = joint
        .iter()
        .map(|(&(x, y), &c)| {
            let pxy = c as f64 / n;
            let px = ca[&x] as f64 / n;
            let py = cb[&y] as f64 / n;
            pxy * ((px / pxy).ln() + (py / pxy).ln())
        })
        .collect();
    // summing in value order makes swapping the arguments exact
    terms.sort_by(f64::total_cmp);
    Ok(terms.iter().sum::<f64>().max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverlapMatrix {
    pub rows: Vec<usize>,
    pub columns: Vec<usize>,
    /// `percent[i][j]`: share of row cluster `rows[i]` that lands in column
    /// cluster `columns[j]`, in percent.
    pub percent: Vec<Vec<f64>>,
}

pub fn overlap_matrix(a: &[usize], b: &[usize]) -> Result<OverlapMatrix, MetricsError> {
    same_len(a.len(), b.len())?;
    let (joint, ca, cb) = joint_counts(a, b);
    let rows: Vec<usize> = ca.keys().copied().collect();
    let columns: Vec<usize> = cb.keys().copied().collect();
    let percent = rows
        .iter()
        .map(|r| {
            columns
                .iter()
                .map(|c| 100.0 * joint.get(&(*r, *c)).copied().unwrap_or(0) as f64 / ca[r] as f64)
                .collect()
        })
        .collect();
    Ok(OverlapMatrix { rows, columns, percent })
}

/// Metrics for one side of a comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusteringSide {
    pub n_clusters: usize,
    pub chi_square: ChiSquareReport,
    /// `None` when the clustering has a single cluster.
    pub centroids: Option<CentroidSimilarity>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub n_videos: usize,
    pub a: ClusteringSide,
    pub b: ClusteringSide,
    pub variation_of_information: f64,
    pub overlap: OverlapMatrix,
}

fn side(vectors: &[Vec<f64>], labels: &[usize], years: &[i32]) -> Result<ClusteringSide, MetricsError> {
    let n_clusters = labels.iter().collect::<BTreeSet<_>>().len();
    let centroids = match centroid_similarity(vectors, labels) {
        Ok(c) => Some(c),
        Err(MetricsError::TooFewClusters(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(ClusteringSide {
        n_clusters,
        chi_square: chi_square_temporal(labels, years)?,
        centroids,
    })
}

/// Compares two clusterings of the same videos. `vectors_a` and
/// `vectors_b` may come from different embedding spaces.
pub fn compare_clusterings(
    vectors_a: &[Vec<f64>],
    labels_a: &[usize],
    vectors_b: &[Vec<f64>],
    labels_b: &[usize],
    years: &[i32],
) -> Result<ComparisonReport, MetricsError> {
    same_len(labels_a.len(), labels_b.len())?;
    Ok(ComparisonReport {
        n_videos: labels_a.len(),
        a: side(vectors_a, labels_a, years)?,
        b: side(vectors_b, labels_b, years)?,
        variation_of_information: variation_of_information(labels_a, labels_b)?,
        overlap: overlap_matrix(labels_a, labels_b)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn expand(table: &[&[usize]], years: &[i32]) -> (Vec<usize>, Vec<i32>) {
        let mut labels = Vec::new();
        let mut ys = Vec::new();
        for (r, row) in table.iter().enumerate() {
            for (c, &count) in row.iter().enumerate() {
                for _ in 0..count {
                    labels.push(r);
                    ys.push(years[c]);
                }
            }
        }
        (labels, ys)
    }

    #[test]
    fn chi_square_examples() {
        let (l, y) = expand(&[&[10, 0], &[0, 10]], &[2019, 2020]);
        let r = chi_square_temporal(&l, &y).unwrap();
        assert!((r.statistic.unwrap() - 20.0).abs() < 1e-12);
        assert_eq!(r.degrees_of_freedom, 1);

        let (l, y) = expand(&[&[2, 4, 6], &[1, 2, 3]], &[2019, 2020, 2021]);
        assert!(chi_square_temporal(&l, &y).unwrap().statistic.unwrap().abs() < 1e-12);

        let (l, y) = expand(&[&[6, 4]], &[2019, 2020]);
        let r = chi_square_temporal(&l, &y).unwrap();
        assert_eq!(r.statistic, None);
        assert!(r.concentrations[0].flagged);
        assert_eq!(r.concentrations[0].top_year, 2019);
        assert!((r.concentrations[0].share - 0.6).abs() < 1e-15);

        let (l, y) = expand(&[&[5, 5]], &[2019, 2020]);
        assert!(!chi_square_temporal(&l, &y).unwrap().concentrations[0].flagged);
    }

    #[test]
    fn centroid_examples() {
        let v = vec![vec![1.0, 0.0], vec![2.0, 0.0], vec![0.0, 3.0]];
        let c = centroid_similarity(&v, &[0, 0, 1]).unwrap();
        assert_eq!(c.matrix[0][1], 0.0);
        assert!(c.merge_candidates.is_empty());

        let c = centroid_similarity(&v, &[0, 1, 2]).unwrap();
        assert_eq!(c.matrix[0][1], 1.0);
        assert_eq!(c.merge_candidates.len(), 1);
        assert_eq!((c.merge_candidates[0].a, c.merge_candidates[0].b), (0, 1));
        assert_eq!(c.max_off_diagonal, 1.0);
        assert!((c.mean_off_diagonal - 1.0 / 3.0).abs() < 1e-12);

        let angle = 0.95f64.acos();
        let v = vec![vec![1.0, 0.0], vec![angle.cos(), angle.sin()]];
        let c = centroid_similarity(&v, &[0, 1]).unwrap();
        assert!((c.matrix[0][1] - 0.95).abs() < 1e-12);
        assert_eq!(c.merge_candidates.len(), 1);

        assert_eq!(centroid_similarity(&v, &[0, 0]), Err(MetricsError::TooFewClusters(1)));
        let v = vec![vec![1.0, 0.0], vec![-1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(centroid_similarity(&v, &[0, 0, 1]), Err(MetricsError::ZeroNormCentroid(0)));
    }

    #[test]
    fn vi_examples() {
        let a = [0, 0, 1, 2, 2];
        assert_eq!(variation_of_information(&a, &a).unwrap(), 0.0);
        let vi = variation_of_information(&[0; 4], &[0, 1, 2, 3]).unwrap();
        assert!((vi - 4f64.ln()).abs() < 1e-12);
        let b = [1, 0, 0, 0, 1];
        assert_eq!(
            variation_of_information(&a, &b).unwrap(),
            variation_of_information(&b, &a).unwrap()
        );
        assert!(variation_of_information(&a, &b[..4]).is_err());
    }

    #[test]
    fn overlap_examples() {
        let a = [0, 0, 1, 2];
        let m = overlap_matrix(&a, &[5, 5, 6, 7]).unwrap();
        assert_eq!(m.percent, vec![vec![100.0, 0.0, 0.0], vec![0.0, 100.0, 0.0], vec![0.0, 0.0, 100.0]]);
        let m = overlap_matrix(&[0; 4], &[0, 0, 1, 1]).unwrap();
        assert_eq!(m.percent, vec![vec![50.0, 50.0]]);
    }
}
