//! Calibration sweeps: cluster once per `cal` and tabulate the results.

use std::fs;
use std::path::Path;

use anyhow::Context;
use mcvc_core::metrics::MetricsReport;
use mcvc_core::simgraph::calibrate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::artifacts::{write_json, ClustersFile, VideoVectors, SWEEP_CSV, SWEEP_JSON};
use crate::config::check_cal;
use crate::stages::{self, SolverChoice};

#[derive(Debug, Clone, PartialEq)]
pub struct SweepEntry {
    pub cal: f64,
    pub clusters: ClustersFile,
    pub report: MetricsReport,
}

/// One summary row; percentages are in percent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub cal: f64,
    pub clusters: usize,
    pub largest: usize,
    pub avg_size: f64,
    pub median: f64,
    pub singletons_pct: f64,
    pub top10_pct: f64,
    pub top20_pct: f64,
    pub clusters_80pct: usize,
    pub gini: f64,
    pub silhouette: f64,
    pub davies_bouldin: f64,
    pub calinski_harabasz: f64,
    pub composite: f64,
}

impl SweepRow {
    pub fn from_entry(e: &SweepEntry) -> Self {
        let r = &e.report;
        Self {
            cal: e.cal,
            clusters: r.n_clusters,
            largest: r.largest,
            avg_size: r.mean_size,
            median: r.median_size,
            singletons_pct: 100.0 * r.singleton_ratio,
            top10_pct: 100.0 * r.top10_coverage,
            top20_pct: 100.0 * r.top20_coverage,
            clusters_80pct: r.clusters_for_80pct,
            gini: r.gini,
            silhouette: r.silhouette,
            davies_bouldin: r.davies_bouldin,
            calinski_harabasz: r.calinski_harabasz,
            composite: r.overall,
        }
    }
}

/// Clusters `vv` once per value in `cals`. Entries run in parallel and come
/// back sorted by `cal` with duplicates removed.
pub fn run_sweep(vv: &VideoVectors, cals: &[f64], solver: SolverChoice) -> anyhow::Result<Vec<SweepEntry>> {
    if cals.is_empty() {
        anyhow::bail!("sweep needs at least one cal value");
    }
    for &c in cals {
        check_cal(c)?;
    }
    let mut sorted = cals.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let sims = stages::similarities(vv)?;
    let ids = vv.ids();
    sorted
        .par_iter()
        .map(|&cal| {
            // same precision as a graph written to disk and read back
            let graph = calibrate(&sims, cal)?.quantized();
            let result = stages::cluster(&graph, solver)?;
            let clusters = ClustersFile::new(&ids, &result, Some(cal))?;
            let report = stages::metrics(vv, &clusters)?;
            Ok(SweepEntry { cal, clusters, report })
        })
        .collect::<anyhow::Result<_>>()
        .context("calibration sweep")
}

/// Entry with the highest composite score; ties go to the smaller `cal`.
pub fn best_entry(entries: &[SweepEntry]) -> Option<&SweepEntry> {
    entries.iter().fold(None, |best: Option<&SweepEntry>, e| match best {
        Some(b) if b.report.overall >= e.report.overall => Some(b),
        _ => Some(e),
    })
}

pub fn summary(entries: &[SweepEntry]) -> Vec<SweepRow> {
    entries.iter().map(SweepRow::from_entry).collect()
}

pub fn cluster_file_name(cal: f64) -> String {
    format!("clusters_cal{cal:.3}.json")
}

/// Writes one cluster file per entry into `cluster_dir` and the summary
/// table as JSON and CSV into `out_dir`.
pub fn write_sweep(entries: &[SweepEntry], out_dir: &Path, cluster_dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(cluster_dir).with_context(|| format!("creating {}", cluster_dir.display()))?;
    for e in entries {
        write_json(&cluster_dir.join(cluster_file_name(e.cal)), &e.clusters)?;
    }
    let rows = summary(entries);
    write_json(&out_dir.join(SWEEP_JSON), &rows)?;
    let csv_path = out_dir.join(SWEEP_CSV);
    let mut w = csv::Writer::from_path(&csv_path).with_context(|| format!("writing {}", csv_path.display()))?;
    for row in &rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}
