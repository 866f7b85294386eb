//! Exact duplicate detection from the first and last non-black frames.
//!
//! Each video is fingerprinted by a pair of 64-bit average hashes taken from
//! the 8×8 luma thumbnails of its boundary frames. Videos whose hash pairs are
//! identical form a group; the earliest posted member of a group is the
//! original and every other member is a duplicate of it.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::embstore::{FrameRecord, VideoEntry};

/// Frames at or below this mean luma count as black.
pub const DEFAULT_BLACK_THRESHOLD: f64 = 5.0;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DedupError {
    #[error("video has no frames")]
    EmptyFrames,
    #[error("thumbnail must be 64 bytes, got {0}")]
    ThumbnailLength(usize),
    #[error("video {0} has no frames")]
    VideoWithoutFrames(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Boundary {
    pub first: usize,
    pub last: usize,
    /// Every frame was black; `first`/`last` are the literal ends.
    pub all_black: bool,
}

/// Positions of the first and last frame brighter than `black_threshold`.
pub fn boundary_frames(frames: &[FrameRecord], black_threshold: f64) -> Result<Boundary, DedupError> {
    if frames.is_empty() {
        return Err(DedupError::EmptyFrames);
    }
    let bright = |f: &&FrameRecord| f.brightness > black_threshold;
    match (frames.iter().position(|f| bright(&f)), frames.iter().rposition(|f| bright(&f))) {
        (Some(first), Some(last)) => Ok(Boundary {
            first,
            last,
            all_black: false,
        }),
        _ => Ok(Boundary {
            first: 0,
            last: frames.len() - 1,
            all_black: true,
        }),
    }
}

/// 64-bit average hash: bit `b` is set iff byte `b` exceeds the thumbnail
/// mean. Byte 0 maps to the most significant bit.
pub fn frame_hash(luma8x8: &[u8]) -> Result<u64, DedupError> {
    if luma8x8.len() != 64 {
        return Err(DedupError::ThumbnailLength(luma8x8.len()));
    }
    // 64·b > Σ is the integer form of b > mean.
    let sum: u32 = luma8x8.iter().map(|&b| b as u32).sum();
    Ok(luma8x8
        .iter()
        .fold(0u64, |acc, &b| (acc << 1) | u64::from(64 * b as u32 > sum)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VideoHash {
    pub video_id: String,
    pub first_hash: u64,
    pub last_hash: u64,
    pub posted_at: DateTime<Utc>,
}

/// Hashes one video; the flag reports an all-black video.
pub fn hash_video(video: &VideoEntry, black_threshold: f64) -> Result<(VideoHash, bool), DedupError> {
    let boundary = boundary_frames(&video.frames, black_threshold)
        .map_err(|_| DedupError::VideoWithoutFrames(video.video_id.clone()))?;
    let hash = VideoHash {
        video_id: video.video_id.clone(),
        first_hash: frame_hash(&video.frames[boundary.first].luma8x8)?,
        last_hash: frame_hash(&video.frames[boundary.last].luma8x8)?,
        posted_at: video.posted_at,
    };
    Ok((hash, boundary.all_black))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DedupCounts {
    pub videos: usize,
    pub originals: usize,
    pub duplicates: usize,
    pub groups_with_duplicates: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DedupReport {
    pub originals: BTreeSet<String>,
    /// duplicate video_id → original video_id
    pub duplicates: BTreeMap<String, String>,
    pub counts: DedupCounts,
    /// Videos whose frames were all black (hashed from the literal ends).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub all_black: Vec<String>,
}

impl DedupReport {
    pub fn is_duplicate(&self, video_id: &str) -> bool {
        self.duplicates.contains_key(video_id)
    }
}

/// Groups videos with identical `(first_hash, last_hash)` pairs. The member
/// with the earliest `posted_at` (ties: smallest `video_id`) is the original.
pub fn mark_duplicates(hashes: &[VideoHash]) -> DedupReport {
    let mut groups: HashMap<(u64, u64), Vec<&VideoHash>> = HashMap::new();
    for h in hashes {
        groups.entry((h.first_hash, h.last_hash)).or_default().push(h);
    }

    let mut report = DedupReport::default();
    for members in groups.values() {
        let original = members
            .iter()
            .min_by(|a, b| a.posted_at.cmp(&b.posted_at).then_with(|| a.video_id.cmp(&b.video_id)))
            .expect("groups are non-empty");
        report.originals.insert(original.video_id.clone());
        if members.len() > 1 {
            report.counts.groups_with_duplicates += 1;
        }
        for m in members {
            if m.video_id != original.video_id {
                report.duplicates.insert(m.video_id.clone(), original.video_id.clone());
            }
        }
    }
    report.counts.videos = hashes.len();
    report.counts.originals = report.originals.len();
    report.counts.duplicates = report.duplicates.len();
    report
}

/// Hashes every video in the manifest and marks duplicates.
pub fn dedup_videos(videos: &[VideoEntry], black_threshold: f64) -> Result<DedupReport, DedupError> {
    let mut hashes = Vec::with_capacity(videos.len());
    let mut all_black = Vec::new();
    for v in videos {
        let (h, black) = hash_video(v, black_threshold)?;
        if black {
            all_black.push(v.video_id.clone());
        }
        hashes.push(h);
    }
    let mut report = mark_duplicates(&hashes);
    report.all_black = all_black;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;

    fn frames_with_brightness(values: &[f64]) -> Vec<FrameRecord> {
        values
            .iter()
            .enumerate()
            .map(|(i, &b)| FrameRecord {
                index: i as u64,
                timestamp_s: i as f64,
                embedding_row: i as u32,
                gray_std: 20.0,
                brightness: b,
                confidence: None,
                luma8x8: [0; 64],
            })
            .collect()
    }

    fn vh(id: &str, first: u64, last: u64, year: i32) -> VideoHash {
        VideoHash {
            video_id: id.into(),
            first_hash: first,
            last_hash: last,
            posted_at: Utc.with_ymd_and_hms(year, 1, 1, 0, 0, 0).unwrap(),
        }
    }

    #[test]
    fn boundary_skips_black_ends() {
        let frames = frames_with_brightness(&[0.0, 0.0, 120.0, 80.0, 0.0]);
        assert_eq!(
            boundary_frames(&frames, 5.0).unwrap(),
            Boundary {
                first: 2,
                last: 3,
                all_black: false
            }
        );
    }

    #[test]
    fn boundary_all_black_and_single() {
        let frames = frames_with_brightness(&[0.0; 4]);
        assert_eq!(
            boundary_frames(&frames, 5.0).unwrap(),
            Boundary {
                first: 0,
                last: 3,
                all_black: true
            }
        );
        let one = frames_with_brightness(&[100.0]);
        assert_eq!(boundary_frames(&one, 5.0).unwrap(), Boundary { first: 0, last: 0, all_black: false });
        assert_eq!(boundary_frames(&[], 5.0), Err(DedupError::EmptyFrames));
    }

    #[test]
    fn boundary_threshold_is_strict() {
        let frames = frames_with_brightness(&[5.0, 5.1, 5.0]);
        assert_eq!(boundary_frames(&frames, 5.0).unwrap().first, 1);
        assert_eq!(boundary_frames(&frames, 5.0).unwrap().last, 1);
    }

    #[test]
    fn hash_uniform_is_zero() {
        assert_eq!(frame_hash(&[77; 64]).unwrap(), 0);
    }

    #[test]
    fn hash_top_half_bright() {
        let mut thumb = [0u8; 64];
        thumb[..32].fill(255);
        assert_eq!(frame_hash(&thumb).unwrap(), 0xFFFF_FFFF_0000_0000);
    }

    #[test]
    fn hash_shift_invariant() {
        let thumb: Vec<u8> = (0..64).map(|i| ((i * 37) % 200) as u8).collect();
        let shifted: Vec<u8> = thumb.iter().map(|b| b + 10).collect();
        assert_eq!(frame_hash(&thumb).unwrap(), frame_hash(&shifted).unwrap());
    }

    #[test]
    fn hash_wrong_length() {
        assert_eq!(frame_hash(&[0; 63]), Err(DedupError::ThumbnailLength(63)));
    }

    #[test]
    fn earliest_is_original() {
        let report = mark_duplicates(&[vh("late", 1, 2, 2020), vh("early", 1, 2, 2019)]);
        assert_eq!(report.originals, BTreeSet::from(["early".to_string()]));
        assert_eq!(report.duplicates.get("late").map(String::as_str), Some("early"));
        assert_eq!(report.counts.originals, 1);
        assert_eq!(report.counts.duplicates, 1);
    }

    #[test]
    fn both_hashes_must_match() {
        let report = mark_duplicates(&[vh("a", 1, 2, 2019), vh("b", 1, 3, 2020)]);
        assert_eq!(report.counts.originals, 2);
        assert!(report.duplicates.is_empty());
    }

    #[test]
    fn tie_break_by_id() {
        let report = mark_duplicates(&[vh("zz", 9, 9, 2021), vh("aa", 9, 9, 2021), vh("mm", 9, 9, 2021)]);
        assert_eq!(report.originals, BTreeSet::from(["aa".to_string()]));
        assert_eq!(report.duplicates.len(), 2);
        assert!(report.duplicates.values().all(|o| o == "aa"));
    }
}
