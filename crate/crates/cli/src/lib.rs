//! `mcvc`: stage-by-stage command-line pipeline for video theme clustering.
//!
//! ```bash
//! mcvc synth --out store --seed 7
//! mcvc pipeline --store store --sweep 0.1:0.9:0.1 --out run
//! mcvc compare --a run/clusters.json --b other/clusters.json --videovecs run/videovecs.bin --out cmp.json
//! ```

pub mod artifacts;
pub mod cli;
pub mod config;
pub mod pipeline;
pub mod stages;
pub mod sweep;
pub mod synth;
