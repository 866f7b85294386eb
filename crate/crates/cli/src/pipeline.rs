//! End-to-end run: dedup, select, combine, graph, cluster, metrics.
//!
//! Every stage writes its artifact to the output directory and the next
//! stage reads that file back, so a pipeline run matches running the
//! subcommands one after another.

use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use mcvc_core::simgraph::CostGraph;
use serde::Serialize;

use crate::artifacts::*;
use crate::config::PipelineConfig;
use crate::stages::{self, SolverChoice, Stage};
use crate::sweep;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineOutcome {
    pub videos: usize,
    pub duplicates: usize,
    pub vectors: usize,
    /// Calibration used for the final clustering.
    pub cal: f64,
    pub n_clusters: usize,
    pub composite: f64,
}

pub fn run_pipeline(cfg: &PipelineConfig, solver: SolverChoice) -> anyhow::Result<PipelineOutcome> {
    cfg.validate().context("invalid configuration")?;
    let out: PathBuf = cfg.out.clone().context("no output directory given")?;

    let store = Stage::LoadStore.run(|| {
        let dir = cfg.store.as_ref().context("no store directory given")?;
        stages::load_store(dir)
    })?;
    fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join(CONFIG_FILE), cfg.to_toml()?)?;

    let dedup_report = Stage::Dedup.run(|| {
        let report = stages::dedup(&store, cfg.black_threshold)?;
        write_json(&out.join(DEDUP_FILE), &report)?;
        Ok(report)
    })?;

    Stage::Select.run(|| {
        let plans = stages::select(&store, cfg.mode, &cfg.selection, Some(&dedup_report))?;
        write_json(&out.join(PLANS_FILE), &plans)
    })?;

    let vv = Stage::Combine.run(|| {
        let plans: Vec<_> = read_json(&out.join(PLANS_FILE))?;
        let vv = stages::combine_plans(&store, &plans, &cfg.combine.params())?;
        vv.write(&out.join(VIDEOVECS_FILE))?;
        VideoVectors::read(&out.join(VIDEOVECS_FILE))
    })?;

    let cal = Stage::Graph.run(|| {
        let cal = if cfg.sweep.is_empty() {
            cfg.cal
        } else {
            let entries = sweep::run_sweep(&vv, &cfg.sweep, solver)?;
            sweep::write_sweep(&entries, &out, &out.join(SWEEP_DIR))?;
            sweep::best_entry(&entries).expect("sweep is non-empty").cal
        };
        stages::graph(&vv, cal)?.write(&out.join(GRAPH_FILE))?;
        Ok(cal)
    })?;

    let clusters = Stage::Cluster.run(|| {
        let graph = CostGraph::read(&out.join(GRAPH_FILE))?;
        let result = stages::cluster(&graph, solver)?;
        let clusters = ClustersFile::new(&vv.ids(), &result, Some(cal))?;
        write_json(&out.join(CLUSTERS_FILE), &clusters)?;
        Ok(clusters)
    })?;

    let report = Stage::Metrics.run(|| {
        let report = stages::metrics(&vv, &clusters)?;
        write_json(&out.join(REPORT_FILE), &report)?;
        Ok(report)
    })?;

    Ok(PipelineOutcome {
        videos: store.manifest.len(),
        duplicates: dedup_report.counts.duplicates,
        vectors: vv.entries.len(),
        cal,
        n_clusters: clusters.n_clusters,
        composite: report.overall,
    })
}
