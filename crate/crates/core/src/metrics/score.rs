//! Weighted composite clustering score.

use serde::{Deserialize, Serialize};

pub const WEIGHT_SILHOUETTE: f64 = 0.3;
pub const WEIGHT_CALINSKI_HARABASZ: f64 = 0.2;
pub const WEIGHT_DAVIES_BOULDIN: f64 = 0.2;
pub const WEIGHT_GINI: f64 = 0.1;
pub const WEIGHT_COVERAGE: f64 = 0.1;
pub const WEIGHT_SINGLETONS: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompositeInputs {
    pub silhouette: f64,
    pub davies_bouldin: f64,
    pub calinski_harabasz: f64,
    pub gini: f64,
    pub top10_coverage: f64,
    pub singleton_ratio: f64,
}

/// Silhouette rescaled from [−1, 1] to [0, 1].
pub fn normalized_silhouette(s: f64) -> f64 {
    (s + 1.0) / 2.0
}

/// `1 − min(DB / 5, 1)`.
pub fn normalized_davies_bouldin(db: f64) -> f64 {
    1.0 - (db / 5.0).min(1.0)
}

/// `min(ln(1 + CH) / 10, 1)`.
pub fn normalized_calinski_harabasz(ch: f64) -> f64 {
    ((1.0 + ch).ln() / 10.0).min(1.0)
}

/// Weighted sum of the six normalized metrics; lies in [0, 1].
pub fn composite_score(m: &CompositeInputs) -> f64 {
    WEIGHT_SILHOUETTE * normalized_silhouette(m.silhouette)
        + WEIGHT_CALINSKI_HARABASZ * normalized_calinski_harabasz(m.calinski_harabasz)
        + WEIGHT_DAVIES_BOULDIN * normalized_davies_bouldin(m.davies_bouldin)
        + WEIGHT_GINI * (1.0 - m.gini)
        + WEIGHT_COVERAGE * m.top10_coverage
        + WEIGHT_SINGLETONS * (1.0 - m.singleton_ratio)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn score(s: f64, db: f64, ch: f64, g: f64, c10: f64, rs: f64) -> f64 {
        composite_score(&CompositeInputs {
            silhouette: s,
            davies_bouldin: db,
            calinski_harabasz: ch,
            gini: g,
            top10_coverage: c10,
            singleton_ratio: rs,
        })
    }

    #[test]
    fn degenerate_rows() {
        assert!((score(-1.0, 10.0, 0.0, 0.0, 1.0, 0.0) - 0.300).abs() < 1e-3);
        assert!((score(-1.0, 10.0, 0.0, 0.666, 1.0, 0.6667) - 0.167).abs() < 1e-3);
    }

    #[test]
    fn weights_sum_to_one() {
        assert!((score(1.0, 0.0, 1e12, 0.0, 1.0, 0.0) - 1.0).abs() < 1e-12);
        assert_eq!(score(-1.0, 5.0, 0.0, 1.0, 0.0, 1.0), 0.0);
    }
}
