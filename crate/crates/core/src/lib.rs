//! Theme discovery over short-form video collections.
//!
//! Frame embeddings are read from an [`embstore`], near-duplicate uploads are
//! removed by [`dedup`], frames are chosen by [`frameselect`] and pooled into
//! one vector per video by [`combine`]. Videos are then partitioned by a
//! minimum-cost multicut over a calibrated cosine graph ([`simgraph`],
//! [`multicut`]) and the result is scored with [`metrics`].

pub mod combine;
pub mod dedup;
pub mod embstore;
pub mod frameselect;
pub mod metrics;
pub mod multicut;
pub mod simgraph;
pub mod vector;
