//! Average-hash dedup and similarity-graph invariants.

use std::collections::BTreeMap;

use chrono::{TimeZone, Utc};
use mcvc_core::dedup::*;
use mcvc_core::simgraph::*;
use proptest::prelude::*;

/// Bit `63 − i` is set when pixel `i` is strictly above the mean.
fn hash_oracle(luma: &[u8]) -> u64 {
    let mean = luma.iter().map(|&b| b as f64).sum::<f64>() / 64.0;
    let mut h = 0u64;
    for (i, &b) in luma.iter().enumerate() {
        if b as f64 > mean {
            h |= 1 << (63 - i);
        }
    }
    h
}

fn hashes(pairs: &[(u8, u8, u8)]) -> Vec<VideoHash> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, &(f, l, day))| VideoHash {
            video_id: format!("v{i:02}"),
            first_hash: f as u64,
            last_hash: l as u64,
            posted_at: Utc.with_ymd_and_hms(2020, 1, 1 + day as u32, 0, 0, 0).unwrap(),
        })
        .collect()
}

fn cosine_oracle(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

fn vectors() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 6), 2..15).prop_map(|mut vs| {
        for v in &mut vs {
            v[0] += 0.5;
        }
        vs
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn frame_hash_matches_mean_threshold(luma in prop::collection::vec(any::<u8>(), 64)) {
        prop_assert_eq!(frame_hash(&luma).unwrap(), hash_oracle(&luma));
    }

    #[test]
    fn frame_hash_ignores_brightness_shift(luma in prop::collection::vec(0u8..=200, 64), shift in 0u8..=55) {
        let shifted: Vec<u8> = luma.iter().map(|b| b + shift).collect();
        prop_assert_eq!(frame_hash(&luma).unwrap(), frame_hash(&shifted).unwrap());
    }

    #[test]
    fn duplicates_form_hash_classes(pairs in prop::collection::vec((0u8..3, 0u8..3, 0u8..5), 1..25)) {
        let hs = hashes(&pairs);
        let report = mark_duplicates(&hs);
        let by_id: BTreeMap<&str, &VideoHash> = hs.iter().map(|h| (h.video_id.as_str(), h)).collect();
        // one original per distinct hash pair
        let classes: std::collections::BTreeSet<(u64, u64)> = hs.iter().map(|h| (h.first_hash, h.last_hash)).collect();
        prop_assert_eq!(report.originals.len(), classes.len());
        prop_assert_eq!(report.originals.len() + report.duplicates.len(), hs.len());
        for (dup, orig) in &report.duplicates {
            let (d, o) = (by_id[dup.as_str()], by_id[orig.as_str()]);
            prop_assert_eq!((d.first_hash, d.last_hash), (o.first_hash, o.last_hash));
            prop_assert!((o.posted_at, &o.video_id) < (d.posted_at, &d.video_id));
            prop_assert!(report.originals.contains(orig));
        }
    }

    #[test]
    fn report_ignores_input_order(pairs in prop::collection::vec((0u8..3, 0u8..3, 0u8..5), 1..25), rot in 0usize..25) {
        let hs = hashes(&pairs);
        let mut shuffled = hs.clone();
        shuffled.rotate_left(rot % hs.len());
        shuffled.reverse();
        prop_assert_eq!(mark_duplicates(&hs), mark_duplicates(&shuffled));
    }

    #[test]
    fn cosine_matrix_matches_oracle_and_ignores_norms(vs in vectors(), scales in prop::collection::vec(0.01f64..100.0, 15)) {
        let m = cosine_matrix(&vs).unwrap();
        let scaled: Vec<Vec<f64>> = vs.iter().zip(&scales).map(|(v, s)| v.iter().map(|x| x * s).collect()).collect();
        let ms = cosine_matrix(&scaled).unwrap();
        for i in 0..vs.len() {
            for j in 0..vs.len() {
                let expected = if i == j { 1.0 } else { cosine_oracle(&vs[i], &vs[j]) };
                prop_assert!((m.get(i, j) - expected).abs() < 1e-12);
                prop_assert_eq!(m.get(i, j), m.get(j, i));
                prop_assert!((m.get(i, j) - ms.get(i, j)).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn raising_cal_raises_every_cost(vs in vectors(), lo in 0.001f64..0.998, gap in 0.0005f64..0.5) {
        let hi = (lo + gap).min(0.999);
        prop_assume!(hi > lo);
        let sims = cosine_matrix(&vs).unwrap();
        let a = calibrate(&sims, lo).unwrap();
        let b = calibrate(&sims, hi).unwrap();
        for (x, y) in a.costs().iter().zip(b.costs()) {
            prop_assert!(y > x);
            // an attractive edge stays attractive
            prop_assert!(!(*x > 0.0 && *y <= 0.0));
        }
    }

    #[test]
    fn graph_file_round_trip(vs in vectors(), cal in 0.01f64..0.99) {
        let g = calibrate(&cosine_matrix(&vs).unwrap(), cal).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("graph.bin");
        g.write(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        prop_assert_eq!(bytes.len(), 8 + 4 * edge_count(g.n()));
        prop_assert_eq!(&bytes[..4], b"MCGW");
        let back = CostGraph::read(&path).unwrap();
        let q = g.quantized();
        prop_assert_eq!(back.costs(), q.costs());
    }
}
