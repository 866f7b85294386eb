//! Portable on-disk embedding store.
//!
//! A store directory holds three files:
//!
//! - `manifest.jsonl`: one [`VideoEntry`] per line.
//! - `embeddings.bin`: `MCVC` magic, `u32` version, `u32` rows, `u32` dim,
//!   then `rows × dim` little-endian `f32` values in row-major order.
//! - `store.json`: store-level metadata (the backbone tag). Optional on read.
//!
//! The matrix layout is shared with the video-vector files written by the
//! combination stage, see [`write_matrix`] and [`read_matrix`].

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const MATRIX_FILE: &str = "embeddings.bin";
pub const META_FILE: &str = "store.json";

pub const MATRIX_MAGIC: [u8; 4] = *b"MCVC";
pub const MATRIX_VERSION: u32 = 1;
const MATRIX_HEADER_LEN: u64 = 16;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("missing store file {0}")]
    MissingFile(PathBuf),
    #[error("{path}: bad magic {found:?}, expected \"MCVC\"")]
    BadMagic { path: PathBuf, found: [u8; 4] },
    #[error("{path}: unsupported matrix version {found}")]
    UnsupportedVersion { path: PathBuf, found: u32 },
    #[error("{path}: shape mismatch: {detail}")]
    ShapeMismatch { path: PathBuf, detail: String },
    #[error("manifest line {line}: {source}")]
    Manifest {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("manifest references {frames} frames but matrix has {rows} rows")]
    RowCountMismatch { frames: usize, rows: usize },
    #[error("video {video_id} frame {frame}: embedding_row {row} out of bounds (rows = {rows})")]
    RowOutOfBounds {
        video_id: String,
        frame: u64,
        row: u32,
        rows: usize,
    },
    #[error("matrix row {row} contains a non-finite value")]
    NonFinite { row: usize },
    #[error("store failed validation: {0}")]
    Invalid(ValidationReport),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One decoded frame of a video plus the statistics needed for validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    /// Frame position in the source video.
    pub index: u64,
    pub timestamp_s: f64,
    /// Row of this frame's embedding in the matrix file.
    pub embedding_row: u32,
    /// Grayscale standard deviation, 0..=255 units.
    pub gray_std: f64,
    /// Mean luma, 0..=255.
    pub brightness: f64,
    /// Max softmax probability of a classifier head, when the backbone has one.
    pub confidence: Option<f64>,
    /// Row-major 8×8 grayscale thumbnail.
    #[serde(with = "luma_base64")]
    pub luma8x8: [u8; 64],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoEntry {
    pub video_id: String,
    pub posted_at: DateTime<Utc>,
    pub duration_s: f64,
    /// Total number of frames in the source video.
    pub frame_count_total: u64,
    pub frames: Vec<FrameRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    pub manifest: Vec<VideoEntry>,
    pub dim: usize,
    /// `rows × dim` values, row-major.
    pub matrix: Vec<f32>,
    pub backbone_tag: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct StoreMeta {
    backbone_tag: String,
}

impl EmbeddingStore {
    pub fn rows(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.matrix.len() / self.dim
        }
    }

    /// Embedding stored at `row`.
    ///
    /// Panics when `row` is out of range; stores returned by [`read_store`]
    /// guarantee every manifest row is in range.
    pub fn embedding(&self, row: u32) -> &[f32] {
        let start = row as usize * self.dim;
        &self.matrix[start..start + self.dim]
    }

    pub fn frame_count(&self) -> usize {
        self.manifest.iter().map(|v| v.frames.len()).sum()
    }
}

mod luma_base64 {
    use base64::engine::general_purpose::STANDARD;
    use base64::Engine;
    use serde::de::Error;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bytes: &[u8; 64], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&STANDARD.encode(bytes))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; 64], D::Error> {
        let text = String::deserialize(d)?;
        let raw = STANDARD.decode(text.as_bytes()).map_err(D::Error::custom)?;
        raw.try_into()
            .map_err(|v: Vec<u8>| D::Error::custom(format!("luma8x8 must be 64 bytes, got {}", v.len())))
    }
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ViolationKind {
    ZeroDim,
    MatrixLength { len: usize, dim: usize },
    RowCountMismatch { frames: usize, rows: usize },
    NonFiniteEmbedding { row: usize },
    NonPositiveDuration { duration_s: f64 },
    FrameCountTotal { total: u64, listed: usize },
    FramesNotIncreasing { previous: u64 },
    GrayStdRange { value: f64 },
    BrightnessRange { value: f64 },
    ConfidenceRange { value: f64 },
    NonFiniteTimestamp,
    RowOutOfBounds { row: u32, rows: usize },
    DuplicateEmbeddingRow {
        row: u32,
        other_video: String,
        other_frame: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub video_id: Option<String>,
    pub frame_index: Option<u64>,
    #[serde(flatten)]
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.video_id, self.frame_index) {
            (Some(v), Some(i)) => write!(f, "video {v} frame {i}: ")?,
            (Some(v), None) => write!(f, "video {v}: ")?,
            _ => {}
        }
        write!(f, "{:?}", self.kind)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn len(&self) -> usize {
        self.violations.len()
    }

    fn push(&mut self, video: Option<&str>, frame: Option<u64>, kind: ViolationKind) {
        self.violations.push(Violation {
            video_id: video.map(str::to_owned),
            frame_index: frame,
            kind,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} violation(s)", self.violations.len())?;
        for v in self.violations.iter().take(5) {
            write!(f, "; {v}")?;
        }
        Ok(())
    }
}

/// Lists every invariant violation in `store`. An empty report means the
/// store is valid.
pub fn validate_store(store: &EmbeddingStore) -> ValidationReport {
    let mut report = ValidationReport::default();

    if store.dim == 0 {
        report.push(None, None, ViolationKind::ZeroDim);
    } else if store.matrix.len() % store.dim != 0 {
        report.push(
            None,
            None,
            ViolationKind::MatrixLength {
                len: store.matrix.len(),
                dim: store.dim,
            },
        );
    }
    let rows = store.rows();
    let frames = store.frame_count();
    if frames != rows {
        report.push(None, None, ViolationKind::RowCountMismatch { frames, rows });
    }
    if store.dim > 0 {
        for (row, values) in store.matrix.chunks(store.dim).enumerate() {
            if values.iter().any(|x| !x.is_finite()) {
                report.push(None, None, ViolationKind::NonFiniteEmbedding { row });
            }
        }
    }

    let mut seen_rows: HashMap<u32, (&str, u64)> = HashMap::new();
    for video in &store.manifest {
        let vid = Some(video.video_id.as_str());
        if !(video.duration_s > 0.0) || !video.duration_s.is_finite() {
            report.push(
                vid,
                None,
                ViolationKind::NonPositiveDuration {
                    duration_s: video.duration_s,
                },
            );
        }
        if (video.frame_count_total as usize) < video.frames.len() {
            report.push(
                vid,
                None,
                ViolationKind::FrameCountTotal {
                    total: video.frame_count_total,
                    listed: video.frames.len(),
                },
            );
        }
        let mut previous: Option<u64> = None;
        for frame in &video.frames {
            let fi = Some(frame.index);
            if let Some(prev) = previous {
                if frame.index <= prev {
                    report.push(vid, fi, ViolationKind::FramesNotIncreasing { previous: prev });
                }
            }
            previous = Some(frame.index);

            if !frame.timestamp_s.is_finite() {
                report.push(vid, fi, ViolationKind::NonFiniteTimestamp);
            }
            if !(0.0..=255.0).contains(&frame.gray_std) {
                report.push(vid, fi, ViolationKind::GrayStdRange { value: frame.gray_std });
            }
            if !(0.0..=255.0).contains(&frame.brightness) {
                report.push(vid, fi, ViolationKind::BrightnessRange { value: frame.brightness });
            }
            if let Some(c) = frame.confidence {
                if !(0.0..=1.0).contains(&c) {
                    report.push(vid, fi, ViolationKind::ConfidenceRange { value: c });
                }
            }
            if frame.embedding_row as usize >= rows {
                report.push(
                    vid,
                    fi,
                    ViolationKind::RowOutOfBounds {
                        row: frame.embedding_row,
                        rows,
                    },
                );
            }
            match seen_rows.get(&frame.embedding_row) {
                Some(&(other_video, other_frame)) => report.push(
                    vid,
                    fi,
                    ViolationKind::DuplicateEmbeddingRow {
                        row: frame.embedding_row,
                        other_video: other_video.to_owned(),
                        other_frame,
                    },
                ),
                None => {
                    seen_rows.insert(frame.embedding_row, (&video.video_id, frame.index));
                }
            }
        }
    }
    report
}

// ---------------------------------------------------------------------------
// Matrix file

/// Writes a `rows × dim` matrix in the `MCVC` v1 layout.
pub fn write_matrix(path: &Path, dim: usize, data: &[f32]) -> Result<(), StoreError> {
    let rows = if dim == 0 { 0 } else { data.len() / dim };
    if dim > 0 && data.len() % dim != 0 {
        return Err(StoreError::ShapeMismatch {
            path: path.to_path_buf(),
            detail: format!("{} values is not a multiple of dim {dim}", data.len()),
        });
    }
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    let mut header = Vec::with_capacity(MATRIX_HEADER_LEN as usize);
    header.extend_from_slice(&MATRIX_MAGIC);
    header.extend_from_slice(&MATRIX_VERSION.to_le_bytes());
    header.extend_from_slice(&(rows as u32).to_le_bytes());
    header.extend_from_slice(&(dim as u32).to_le_bytes());
    out.write_all(&header).map_err(io_err(path))?;
    for value in data {
        out.write_all(&value.to_le_bytes()).map_err(io_err(path))?;
    }
    out.flush().map_err(io_err(path))
}

/// Reads an `MCVC` v1 matrix file, returning `(rows, dim, values)`.
pub fn read_matrix(path: &Path) -> Result<(usize, usize, Vec<f32>), StoreError> {
    if !path.exists() {
        return Err(StoreError::MissingFile(path.to_path_buf()));
    }
    let mut file = fs::File::open(path).map_err(io_err(path))?;
    let file_len = file.metadata().map_err(io_err(path))?.len();
    if file_len < MATRIX_HEADER_LEN {
        return Err(StoreError::ShapeMismatch {
            path: path.to_path_buf(),
            detail: format!("file is {file_len} bytes, shorter than the 16-byte header"),
        });
    }
    let mut header = [0u8; MATRIX_HEADER_LEN as usize];
    file.read_exact(&mut header).map_err(io_err(path))?;
    let magic: [u8; 4] = header[0..4].try_into().unwrap();
    if magic != MATRIX_MAGIC {
        return Err(StoreError::BadMagic {
            path: path.to_path_buf(),
            found: magic,
        });
    }
    let word = |at: usize| u32::from_le_bytes(header[at..at + 4].try_into().unwrap());
    let version = word(4);
    if version != MATRIX_VERSION {
        return Err(StoreError::UnsupportedVersion {
            path: path.to_path_buf(),
            found: version,
        });
    }
    let rows = word(8) as usize;
    let dim = word(12) as usize;
    let expected = MATRIX_HEADER_LEN + 4 * (rows as u64) * (dim as u64);
    if file_len != expected {
        return Err(StoreError::ShapeMismatch {
            path: path.to_path_buf(),
            detail: format!("header declares {rows}×{dim} ({expected} bytes) but file is {file_len} bytes"),
        });
    }
    let mut raw = Vec::with_capacity((expected - MATRIX_HEADER_LEN) as usize);
    file.read_to_end(&mut raw).map_err(io_err(path))?;
    let data = raw
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    Ok((rows, dim, data))
}

// ---------------------------------------------------------------------------
// Store I/O

/// Writes `store` into `dir`, creating the directory if needed. The store is
/// validated first and nothing is written when it is invalid.
pub fn write_store(store: &EmbeddingStore, dir: &Path) -> Result<(), StoreError> {
    let report = validate_store(store);
    if !report.is_empty() {
        return Err(StoreError::Invalid(report));
    }
    fs::create_dir_all(dir).map_err(io_err(dir))?;

    let manifest_path = dir.join(MANIFEST_FILE);
    let file = fs::File::create(&manifest_path).map_err(io_err(&manifest_path))?;
    let mut out = BufWriter::new(file);
    for entry in &store.manifest {
        let line = serde_json::to_string(entry).expect("manifest entries always serialize");
        writeln!(out, "{line}").map_err(io_err(&manifest_path))?;
    }
    out.flush().map_err(io_err(&manifest_path))?;

    write_matrix(&dir.join(MATRIX_FILE), store.dim, &store.matrix)?;

    let meta_path = dir.join(META_FILE);
    let meta = StoreMeta {
        backbone_tag: store.backbone_tag.clone(),
    };
    fs::write(&meta_path, serde_json::to_vec_pretty(&meta).unwrap()).map_err(io_err(&meta_path))
}

pub fn read_manifest(path: &Path) -> Result<Vec<VideoEntry>, StoreError> {
    if !path.exists() {
        return Err(StoreError::MissingFile(path.to_path_buf()));
    }
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut entries = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(&line).map_err(|source| StoreError::Manifest { line: n + 1, source })?;
        entries.push(entry);
    }
    Ok(entries)
}

/// Reads and fully validates the store in `dir`.
pub fn read_store(dir: &Path) -> Result<EmbeddingStore, StoreError> {
    if !dir.is_dir() {
        return Err(StoreError::MissingFile(dir.to_path_buf()));
    }
    let manifest = read_manifest(&dir.join(MANIFEST_FILE))?;
    let (rows, dim, matrix) = read_matrix(&dir.join(MATRIX_FILE))?;

    let meta_path = dir.join(META_FILE);
    let backbone_tag = if meta_path.exists() {
        let raw = fs::read(&meta_path).map_err(io_err(&meta_path))?;
        serde_json::from_slice::<StoreMeta>(&raw)
            .map_err(|source| StoreError::Manifest { line: 0, source })?
            .backbone_tag
    } else {
        String::new()
    };

    let frames: usize = manifest.iter().map(|v| v.frames.len()).sum();
    if frames != rows {
        return Err(StoreError::RowCountMismatch { frames, rows });
    }
    for video in &manifest {
        for frame in &video.frames {
            if frame.embedding_row as usize >= rows {
                return Err(StoreError::RowOutOfBounds {
                    video_id: video.video_id.clone(),
                    frame: frame.index,
                    row: frame.embedding_row,
                    rows,
                });
            }
        }
    }
    if dim > 0 {
        if let Some(row) = matrix.chunks(dim).position(|r| r.iter().any(|x| !x.is_finite())) {
            return Err(StoreError::NonFinite { row });
        }
    }

    let store = EmbeddingStore {
        manifest,
        dim,
        matrix,
        backbone_tag,
    };
    let report = validate_store(&store);
    if !report.is_empty() {
        return Err(StoreError::Invalid(report));
    }
    Ok(store)
}
