//! Metric invariants and comparison-suite properties, with direct
//! re-derivations as oracles.

use std::collections::BTreeMap;

use mcvc_core::metrics::*;
use proptest::prelude::*;

fn gini_oracle(sizes: &[usize]) -> f64 {
    let k = sizes.len() as f64;
    let total: usize = sizes.iter().sum();
    let mut num = 0.0;
    for &a in sizes {
        for &b in sizes {
            num += (a as f64 - b as f64).abs();
        }
    }
    num / (2.0 * k * total as f64)
}

/// H(A) + H(B) − 2 I(A;B) from entropies of the marginals and joint.
fn vi_oracle(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let entropy = |counts: Vec<usize>| -> f64 {
        counts
            .into_iter()
            .map(|c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let tally = |keys: Vec<(usize, usize)>| {
        let mut m: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for k in keys {
            *m.entry(k).or_default() += 1;
        }
        m.into_values().collect::<Vec<_>>()
    };
    let ha = entropy(tally(a.iter().map(|&x| (x, 0)).collect()));
    let hb = entropy(tally(b.iter().map(|&y| (0, y)).collect()));
    let hab = entropy(tally(a.iter().zip(b).map(|(&x, &y)| (x, y)).collect()));
    // I = H(A) + H(B) − H(A,B), so VI = 2 H(A,B) − H(A) − H(B)
    2.0 * hab - ha - hb
}

fn labels(n: usize, k: usize) -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..k, n)
}

fn points() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<usize>)> {
    (4usize..30).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), n),
            prop::collection::vec(0usize..4, n),
        )
    })
}

fn rotate(v: &[f64], a: f64, b: f64) -> Vec<f64> {
    // rotation about z by a, then about x by b
    let (x, y, z) = (v[0], v[1], v[2]);
    let (x1, y1) = (x * a.cos() - y * a.sin(), x * a.sin() + y * a.cos());
    let (y2, z2) = (y1 * b.cos() - z * b.sin(), y1 * b.sin() + z * b.cos());
    vec![x1, y2, z2]
}

#[test]
fn fixed_comparison_examples() {
    let n = 37;
    let one = vec![0; n];
    let singles: Vec<usize> = (0..n).collect();
    assert!((variation_of_information(&one, &singles).unwrap() - (n as f64).ln()).abs() < 1e-9);

    let mut l = vec![0; 10];
    l.extend(vec![1; 10]);
    let mut y = vec![2019; 10];
    y.extend(vec![2020; 10]);
    assert!((chi_square_temporal(&l, &y).unwrap().statistic.unwrap() - 20.0).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn gini_matches_pairwise_sum(sizes in prop::collection::vec(1usize..500, 1..40)) {
        prop_assert!((gini(&sizes).unwrap() - gini_oracle(&sizes)).abs() < 1e-12);
    }

    #[test]
    fn gini_invariances(sizes in prop::collection::vec(1usize..500, 1..40), m in 1usize..20, rot in 0usize..40) {
        let g = gini(&sizes).unwrap();
        let scaled: Vec<usize> = sizes.iter().map(|s| s * m).collect();
        prop_assert!((gini(&scaled).unwrap() - g).abs() < 1e-12);
        let mut perm = sizes.clone();
        perm.rotate_left(rot % sizes.len());
        prop_assert!((gini(&perm).unwrap() - g).abs() < 1e-12);
        let equal = sizes.iter().all(|&s| s == sizes[0]);
        prop_assert_eq!(g == 0.0, equal);
    }

    #[test]
    fn vi_matches_entropy_form(a in labels(40, 5), b in labels(40, 6)) {
        let vi = variation_of_information(&a, &b).unwrap();
        prop_assert!((vi - vi_oracle(&a, &b)).abs() < 1e-9);
        prop_assert!(vi >= 0.0);
        prop_assert!(vi <= 2.0 * 40f64.ln());
        prop_assert_eq!(vi, variation_of_information(&b, &a).unwrap());
    }

    #[test]
    fn vi_is_a_metric_on_partitions(a in labels(30, 4), b in labels(30, 4), c in labels(30, 4), perm in 0usize..24) {
        prop_assert_eq!(variation_of_information(&a, &a).unwrap(), 0.0);
        // relabelling gives distance zero
        let table = [[0, 1, 2, 3], [3, 2, 1, 0], [1, 0, 3, 2], [2, 3, 0, 1]];
        let relabel: Vec<usize> = a.iter().map(|&x| table[perm % 4][x] + 10).collect();
        prop_assert!(variation_of_information(&a, &relabel).unwrap() < 1e-12);
        let ab = variation_of_information(&a, &b).unwrap();
        let bc = variation_of_information(&b, &c).unwrap();
        let ac = variation_of_information(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-9);
    }

    #[test]
    fn overlap_rows_sum_to_hundred(a in labels(50, 6), b in labels(50, 7)) {
        let m = overlap_matrix(&a, &b).unwrap();
        for row in &m.percent {
            prop_assert!((row.iter().sum::<f64>() - 100.0).abs() < 1e-6);
        }
    }

    #[test]
    fn chi_square_zero_on_proportional_tables(
        base in prop::collection::vec(1usize..6, 2..5),
        mult in prop::collection::vec(1usize..4, 2..5),
    ) {
        // cluster r holds mult[r]·base[c] videos from year c
        let mut l = Vec::new();
        let mut y = Vec::new();
        for (r, &m) in mult.iter().enumerate() {
            for (c, &b) in base.iter().enumerate() {
                for _ in 0..m * b {
                    l.push(r);
                    y.push(2019 + c as i32);
                }
            }
        }
        let stat = chi_square_temporal(&l, &y).unwrap().statistic.unwrap();
        prop_assert!(stat.abs() < 1e-9);
    }

    #[test]
    fn chi_square_positive_when_not_proportional(a in labels(30, 3), years in prop::collection::vec(2019i32..2023, 30)) {
        let r = chi_square_temporal(&a, &years).unwrap();
        if let Some(stat) = r.statistic {
            prop_assert!(stat >= -1e-12);
        }
        for c in &r.concentrations {
            prop_assert_eq!(c.flagged, c.share > 0.5);
        }
    }

    #[test]
    fn silhouette_bounded_and_rotation_invariant((pts, lab) in points(), a in 0.0..std::f64::consts::TAU, b in 0.0..std::f64::consts::TAU) {
        let s = silhouette(&pts, &lab).unwrap();
        prop_assert!((-1.0..=1.0).contains(&s));
        let rotated: Vec<Vec<f64>> = pts.iter().map(|p| rotate(p, a, b)).collect();
        prop_assert!((silhouette(&rotated, &lab).unwrap() - s).abs() < 1e-9);
        let db = davies_bouldin(&pts, &lab).unwrap();
        prop_assert!((davies_bouldin(&rotated, &lab).unwrap() - db).abs() < 1e-9 * (1.0 + db));
        let ch = calinski_harabasz(&pts, &lab).unwrap();
        prop_assert!((calinski_harabasz(&rotated, &lab).unwrap() - ch).abs() < 1e-7 * (1.0 + ch));
    }

    #[test]
    fn composite_monotone(
        s in -1.0f64..1.0, db in 0.0f64..10.0, ch in 0.0f64..1e5, g in 0.0f64..1.0, c in 0.0f64..1.0, r in 0.0f64..1.0,
        d in 0.001f64..0.5,
    ) {
        let base = CompositeInputs { silhouette: s, davies_bouldin: db, calinski_harabasz: ch, gini: g, top10_coverage: c, singleton_ratio: r };
        let v = composite_score(&base);
        prop_assert!((0.0..=1.0).contains(&v));
        let up = [
            CompositeInputs { silhouette: (s + d).min(1.0), ..base },
            CompositeInputs { calinski_harabasz: ch + d * 100.0, ..base },
            CompositeInputs { top10_coverage: (c + d).min(1.0), ..base },
        ];
        let down = [
            CompositeInputs { davies_bouldin: db + d, ..base },
            CompositeInputs { gini: (g + d).min(1.0), ..base },
            CompositeInputs { singleton_ratio: (r + d).min(1.0), ..base },
        ];
        for x in up {
            prop_assert!(composite_score(&x) >= v);
        }
        for x in down {
            prop_assert!(composite_score(&x) <= v);
        }
    }
}
