//! Store round trips and validation soundness under injected faults.

use chrono::{TimeZone, Utc};
use mcvc_core::embstore::*;
use proptest::prelude::*;

/// A valid store: `shape[v]` frames for video `v`, rows assigned in order.
fn build(shape: &[usize], dim: usize, seed: u64) -> EmbeddingStore {
    let mut row = 0u32;
    let mut x = seed as f32;
    let mut next = || {
        x = (x * 1.37 + 0.71) % 7.0;
        x - 3.5
    };
    let manifest = shape
        .iter()
        .enumerate()
        .map(|(v, &count)| VideoEntry {
            video_id: format!("vid{v}"),
            posted_at: Utc.with_ymd_and_hms(2019 + (v % 4) as i32, 1 + (v % 12) as u32, 3, 4, 5, 6).unwrap(),
            duration_s: count as f64 + 0.5,
            frame_count_total: (count * 30) as u64,
            frames: (0..count)
                .map(|i| {
                    row += 1;
                    FrameRecord {
                        index: (i * 30) as u64,
                        timestamp_s: i as f64,
                        embedding_row: row - 1,
                        gray_std: 12.5 + i as f64,
                        brightness: 100.25,
                        confidence: if i % 2 == 0 { Some(0.5) } else { None },
                        luma8x8: [((v * 7 + i) % 256) as u8; 64],
                    }
                })
                .collect(),
        })
        .collect();
    let matrix = (0..row as usize * dim).map(|_| next()).collect();
    EmbeddingStore {
        manifest,
        dim,
        matrix,
        backbone_tag: "test".into(),
    }
}

fn shapes() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..6, 1..6)
}

#[derive(Debug, Clone, Copy)]
enum Fault {
    Duration,
    FrameTotal,
    Order,
    GrayStd,
    Brightness,
    Confidence,
    Timestamp,
    RowBounds,
    RowReuse,
    NonFinite,
    MissingRow,
}

const FAULTS: [Fault; 11] = [
    Fault::Duration,
    Fault::FrameTotal,
    Fault::Order,
    Fault::GrayStd,
    Fault::Brightness,
    Fault::Confidence,
    Fault::Timestamp,
    Fault::RowBounds,
    Fault::RowReuse,
    Fault::NonFinite,
    Fault::MissingRow,
];

/// Applies `fault` and returns a predicate recognising the violation kind
/// that must be reported.
fn inject(store: &mut EmbeddingStore, fault: Fault) -> Option<fn(&ViolationKind) -> bool> {
    let rows = store.rows() as u32;
    let v = &mut store.manifest[0];
    Some(match fault {
        Fault::Duration => {
            v.duration_s = -1.0;
            |k| matches!(k, ViolationKind::NonPositiveDuration { .. })
        }
        Fault::FrameTotal => {
            v.frame_count_total = v.frames.len() as u64 - 1;
            |k| matches!(k, ViolationKind::FrameCountTotal { .. })
        }
        Fault::Order => {
            if v.frames.len() < 2 {
                return None;
            }
            v.frames[1].index = v.frames[0].index;
            |k| matches!(k, ViolationKind::FramesNotIncreasing { .. })
        }
        Fault::GrayStd => {
            v.frames[0].gray_std = -0.5;
            |k| matches!(k, ViolationKind::GrayStdRange { .. })
        }
        Fault::Brightness => {
            v.frames[0].brightness = 300.0;
            |k| matches!(k, ViolationKind::BrightnessRange { .. })
        }
        Fault::Confidence => {
            v.frames[0].confidence = Some(1.5);
            |k| matches!(k, ViolationKind::ConfidenceRange { .. })
        }
        Fault::Timestamp => {
            v.frames[0].timestamp_s = f64::NAN;
            |k| matches!(k, ViolationKind::NonFiniteTimestamp)
        }
        Fault::RowBounds => {
            v.frames[0].embedding_row = rows + 3;
            |k| matches!(k, ViolationKind::RowOutOfBounds { .. })
        }
        Fault::RowReuse => {
            if store.frame_count() < 2 {
                return None;
            }
            let last = store.manifest.last_mut().unwrap().frames.last_mut().unwrap();
            last.embedding_row = 0;
            |k| matches!(k, ViolationKind::DuplicateEmbeddingRow { .. })
        }
        Fault::NonFinite => {
            store.matrix[0] = f32::INFINITY;
            |k| matches!(k, ViolationKind::NonFiniteEmbedding { row: 0 })
        }
        Fault::MissingRow => {
            let dim = store.dim;
            store.matrix.truncate(store.matrix.len() - dim);
            |k| matches!(k, ViolationKind::RowCountMismatch { .. })
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_then_read_is_identity(shape in shapes(), dim in 1usize..9, seed in 0u64..1000) {
        let store = build(&shape, dim, seed);
        prop_assert!(validate_store(&store).is_empty());
        let dir = tempfile::tempdir().unwrap();
        write_store(&store, dir.path()).unwrap();
        let back = read_store(dir.path()).unwrap();
        prop_assert_eq!(back.manifest, store.manifest);
        let bits = |m: &[f32]| m.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&back.matrix), bits(&store.matrix));
        prop_assert_eq!(back.dim, store.dim);
        prop_assert_eq!(back.backbone_tag, store.backbone_tag);
    }

    #[test]
    fn every_injected_fault_is_reported(shape in shapes(), dim in 1usize..5, which in 0usize..11) {
        let mut store = build(&shape, dim, 1);
        let fault = FAULTS[which];
        if let Some(expected) = inject(&mut store, fault) {
            let report = validate_store(&store);
            prop_assert!(report.violations.iter().any(|v| expected(&v.kind)), "{:?} not reported: {}", fault, report);
            let dir = tempfile::tempdir().unwrap();
            prop_assert!(write_store(&store, dir.path()).is_err());
            prop_assert!(!dir.path().join(MATRIX_FILE).exists());
        }
    }

    #[test]
    fn clean_stores_report_nothing(shape in shapes(), dim in 1usize..5) {
        let report = validate_store(&build(&shape, dim, 2));
        prop_assert!(report.is_empty(), "{}", report);
    }
}
