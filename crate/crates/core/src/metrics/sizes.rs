//! Statistics over cluster sizes.

use super::MetricsError;

fn check(sizes: &[usize]) -> Result<(), MetricsError> {
    if sizes.is_empty() {
        return Err(MetricsError::Empty);
    }
    if sizes.contains(&0) {
        return Err(MetricsError::EmptyCluster);
    }
    Ok(())
}

fn descending(sizes: &[usize]) -> Vec<usize> {
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted
}

/// Gini coefficient `ΣᵢΣⱼ|nᵢ − nⱼ| / (2k Σ nᵢ)` over ordered pairs.
pub fn gini(sizes: &[usize]) -> Result<f64, MetricsError> {
    check(sizes)?;
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable();
    let k = sorted.len() as f64;
    // with ascending sizes, ΣᵢΣⱼ|nᵢ − nⱼ| = 2 Σᵢ (2i − k + 1) nᵢ
    let pair_sum: f64 = sorted
        .iter()
        .enumerate()
        .map(|(i, &s)| (2.0 * i as f64 - k + 1.0) * s as f64)
        .sum::<f64>()
        * 2.0;
    let total: f64 = sorted.iter().map(|&s| s as f64).sum();
    Ok(pair_sum / (2.0 * k * total))
}

/// Share of all items held by the `top` largest clusters.
pub fn coverage_top(sizes: &[usize], top: usize) -> Result<f64, MetricsError> {
    check(sizes)?;
    let sorted = descending(sizes);
    let total: usize = sorted.iter().sum();
    let covered: usize = sorted.iter().take(top).sum();
    Ok(covered as f64 / total as f64)
}

pub fn coverage_top10(sizes: &[usize]) -> Result<f64, MetricsError> {
    coverage_top(sizes, 10)
}

/// Fewest clusters (largest first) holding at least `share` of all items.
pub fn clusters_for_coverage(sizes: &[usize], share: f64) -> Result<usize, MetricsError> {
    check(sizes)?;
    let sorted = descending(sizes);
    let total: usize = sorted.iter().sum();
    let mut covered = 0usize;
    for (i, s) in sorted.iter().enumerate() {
        covered += s;
        if covered as f64 >= share * total as f64 {
            return Ok(i + 1);
        }
    }
    Ok(sorted.len())
}

/// Fraction of clusters with exactly one member.
pub fn singleton_ratio(sizes: &[usize]) -> Result<f64, MetricsError> {
    check(sizes)?;
    Ok(sizes.iter().filter(|&&s| s == 1).count() as f64 / sizes.len() as f64)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ClusterStats {
    pub clusters: usize,
    pub largest: usize,
    pub mean: f64,
    pub median: f64,
}

pub fn cluster_stats(sizes: &[usize]) -> Result<ClusterStats, MetricsError> {
    check(sizes)?;
    let mut sorted = sizes.to_vec();
    sorted.sort_unstable();
    let k = sorted.len();
    let median = if k % 2 == 1 {
        sorted[k / 2] as f64
    } else {
        (sorted[k / 2 - 1] + sorted[k / 2]) as f64 / 2.0
    };
    Ok(ClusterStats {
        clusters: k,
        largest: sorted[k - 1],
        mean: sorted.iter().sum::<usize>() as f64 / k as f64,
        median,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gini_brute(sizes: &[usize]) -> f64 {
        let k = sizes.len() as f64;
        let mut num = 0.0;
        for &a in sizes {
            for &b in sizes {
                num += (a as f64 - b as f64).abs();
            }
        }
        num / (2.0 * k * sizes.iter().sum::<usize>() as f64)
    }

    #[test]
    fn gini_examples() {
        assert_eq!(gini(&[7, 7, 7]).unwrap(), 0.0);
        assert_eq!(gini(&[2970]).unwrap(), 0.0);
        let g = gini(&[2968, 1, 1]).unwrap();
        assert!((g - 0.666).abs() < 1e-3, "{g}");
        assert!((g - gini_brute(&[2968, 1, 1])).abs() < 1e-12);
        assert_eq!(gini(&[]), Err(MetricsError::Empty));
    }

    #[test]
    fn gini_matches_double_sum() {
        let cases: [&[usize]; 4] = [&[1, 2, 3, 4], &[50, 1, 1, 1, 9], &[3, 3, 8], &[1000, 1]];
        for sizes in cases {
            assert!((gini(sizes).unwrap() - gini_brute(sizes)).abs() < 1e-12);
        }
    }

    #[test]
    fn coverage_examples() {
        assert_eq!(coverage_top10(&[5, 3, 1]).unwrap(), 1.0);
        assert_eq!(coverage_top10(&[2968, 1, 1]).unwrap(), 1.0);
        assert_eq!(coverage_top10(&[50; 20]).unwrap(), 0.5);
        assert_eq!(coverage_top(&[1, 9, 5], 1).unwrap(), 0.6);
    }

    #[test]
    fn clusters_for_eighty_percent() {
        assert_eq!(clusters_for_coverage(&[2968, 1, 1], 0.8).unwrap(), 1);
        assert_eq!(clusters_for_coverage(&[1; 10], 0.8).unwrap(), 8);
        assert_eq!(clusters_for_coverage(&[5, 3, 2], 0.8).unwrap(), 2);
    }

    #[test]
    fn singleton_examples() {
        assert_eq!(singleton_ratio(&[2, 3]).unwrap(), 0.0);
        assert!((singleton_ratio(&[2968, 1, 1]).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(singleton_ratio(&[1, 1, 1]).unwrap(), 1.0);
    }

    #[test]
    fn stats_examples() {
        let s = cluster_stats(&[2968, 1, 1]).unwrap();
        assert_eq!(
            s,
            ClusterStats {
                clusters: 3,
                largest: 2968,
                mean: 990.0,
                median: 1.0
            }
        );
        let s = cluster_stats(&[2970]).unwrap();
        assert_eq!((s.mean, s.median), (2970.0, 2970.0));
        assert_eq!(cluster_stats(&[4, 1, 3, 2]).unwrap().median, 2.5);
    }
}
