//! Argument parsing and subcommand dispatch.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use mcvc_core::combine::CombineMethod;
use mcvc_core::embstore::write_store;
use mcvc_core::frameselect::SelectionMode;
use mcvc_core::simgraph::CostGraph;

use crate::artifacts::*;
use crate::config::{parse_cal_list, PipelineConfig};
use crate::pipeline::run_pipeline;
use crate::stages::{self, SolverChoice, Stage};
use crate::sweep;
use crate::synth::{self, SynthParams};

#[derive(Debug, Parser)]
#[command(name = "mcvc", version, about = "Cluster short videos into themes with minimum-cost multicut")]
pub struct Cli {
    /// TOML configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file, or directory for pipeline, sweep and synth.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct SelectArgs {
    #[arg(long)]
    pub mode: Option<SelectionMode>,
    #[arg(long)]
    pub fps: Option<f64>,
    #[arg(long)]
    pub n_min: Option<usize>,
    #[arg(long)]
    pub n_max: Option<usize>,
}

#[derive(Debug, Args, Default)]
pub struct CombineArgs {
    #[arg(long)]
    pub method: Option<CombineMethod>,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub radius: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mark near-duplicate uploads.
    Dedup {
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        black_threshold: Option<f64>,
    },
    /// Choose frames for every video.
    Select {
        #[arg(long)]
        store: Option<PathBuf>,
        /// Skip the duplicates listed in this dedup report.
        #[arg(long)]
        dedup: Option<PathBuf>,
        #[command(flatten)]
        select: SelectArgs,
    },
    /// Pool the selected frames into one vector per video.
    Combine {
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        plans: PathBuf,
        #[command(flatten)]
        combine: CombineArgs,
    },
    /// Build the calibrated cost graph.
    Graph {
        #[arg(long)]
        videovecs: PathBuf,
        #[arg(long)]
        cal: Option<f64>,
    },
    /// Solve the multicut problem on a graph file.
    Cluster {
        #[arg(long)]
        graph: PathBuf,
        /// Names the graph nodes; node indices are used without it.
        #[arg(long)]
        videovecs: Option<PathBuf>,
        #[arg(long, default_value = "gaec+klj")]
        solver: SolverChoice,
    },
    /// Score a clustering.
    Metrics {
        #[arg(long)]
        videovecs: PathBuf,
        #[arg(long)]
        clusters: PathBuf,
    },
    /// Compare two clusterings of the same videos.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        videovecs: PathBuf,
        /// Vectors for clustering B when it lives in another embedding space.
        #[arg(long)]
        videovecs_b: Option<PathBuf>,
    },
    /// Cluster once per calibration value and tabulate the results.
    Sweep {
        #[arg(long)]
        videovecs: PathBuf,
        /// `0.1,0.5,0.9` or `start:stop:step`.
        #[arg(long)]
        cals: Option<String>,
        #[arg(long, default_value = "gaec+klj")]
        solver: SolverChoice,
    },
    /// Run every stage from store to metrics report.
    Pipeline {
        #[arg(long)]
        store: Option<PathBuf>,
        #[command(flatten)]
        select: SelectArgs,
        #[command(flatten)]
        combine: CombineArgs,
        #[arg(long)]
        cal: Option<f64>,
        /// Sweep these values and keep the best composite score.
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long, default_value = "gaec+klj")]
        solver: SolverChoice,
    },
    /// Write a planted-partition store.
    Synth {
        #[arg(long, default_value_t = 200)]
        videos: usize,
        #[arg(long, default_value_t = 4)]
        clusters: usize,
        #[arg(long, default_value_t = 32)]
        dim: usize,
        #[arg(long, default_value_t = 0.3)]
        sigma: f64,
        #[arg(long, default_value_t = 0.3)]
        frame_noise: f64,
        #[arg(long, default_value_t = 1.0)]
        shared: f64,
        #[arg(long, default_value_t = 6.0)]
        min_separation: f64,
        #[arg(long, default_value_t = 0)]
        duplicates: usize,
    },
}

struct Context_ {
    cfg: PipelineConfig,
    out: Option<PathBuf>,
}

impl Context_ {
    /// Explicit `--out`, else `default_name` inside the configured directory.
    fn out_file(&self, default_name: &str) -> anyhow::Result<PathBuf> {
        if let Some(p) = &self.out {
            return Ok(p.clone());
        }
        match &self.cfg.out {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                Ok(dir.join(default_name))
            }
            None => anyhow::bail!("--out is required"),
        }
    }

    fn out_dir(&self) -> anyhow::Result<PathBuf> {
        let dir = self
            .out
            .clone()
            .or_else(|| self.cfg.out.clone())
            .context("--out is required")?;
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir)
    }

    fn store(&self, flag: &Option<PathBuf>) -> anyhow::Result<PathBuf> {
        flag.clone()
            .or_else(|| self.cfg.store.clone())
            .context("--store is required")
    }
}

fn apply_select(cfg: &mut PipelineConfig, a: &SelectArgs) {
    if let Some(m) = a.mode {
        cfg.mode = m;
    }
    if let Some(v) = a.fps {
        cfg.selection.fps = v;
    }
    if let Some(v) = a.n_min {
        cfg.selection.n_min = v;
    }
    if let Some(v) = a.n_max {
        cfg.selection.n_max = v;
    }
}

fn apply_combine(cfg: &mut PipelineConfig, a: &CombineArgs) {
    if let Some(m) = a.method {
        if m != cfg.combine.method {
            // a configured tau belongs to the configured method
            cfg.combine.tau = None;
        }
        cfg.combine.method = m;
    }
    if let Some(t) = a.tau {
        cfg.combine.tau = Some(t);
    }
    if let Some(r) = a.radius {
        cfg.combine.radius = r;
    }
}

fn load_store(dir: &Path) -> anyhow::Result<mcvc_core::embstore::EmbeddingStore> {
    Stage::LoadStore.run(|| stages::load_store(dir))
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
            pool.install(|| dispatch(cli))
        }
        None => dispatch(cli),
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    let mut ctx = Context_ { cfg, out: cli.out };

    match cli.command {
        Command::Dedup { store, black_threshold } => {
            if let Some(t) = black_threshold {
                ctx.cfg.black_threshold = t;
            }
            let store = load_store(&ctx.store(&store)?)?;
            let report = Stage::Dedup.run(|| stages::dedup(&store, ctx.cfg.black_threshold))?;
            write_json(&ctx.out_file(DEDUP_FILE)?, &report)?;
            println!(
                "{} videos, {} duplicates in {} groups",
                report.counts.videos, report.counts.duplicates, report.counts.groups_with_duplicates
            );
        }
        Command::Select { store, dedup, select } => {
            apply_select(&mut ctx.cfg, &select);
            let store = load_store(&ctx.store(&store)?)?;
            let plans = Stage::Select.run(|| {
                let report = dedup.as_deref().map(read_json).transpose()?;
                stages::select(&store, ctx.cfg.mode, &ctx.cfg.selection, report.as_ref())
            })?;
            write_json(&ctx.out_file(PLANS_FILE)?, &plans)?;
            println!("planned {} videos", plans.len());
        }
        Command::Combine { store, plans, combine } => {
            apply_combine(&mut ctx.cfg, &combine);
            let store = load_store(&ctx.store(&store)?)?;
            let vv = Stage::Combine.run(|| {
                let plans: Vec<_> = read_json(&plans)?;
                stages::combine_plans(&store, &plans, &ctx.cfg.combine.params())
            })?;
            vv.write(&ctx.out_file(VIDEOVECS_FILE)?)?;
            println!("{} video vectors of dimension {}", vv.entries.len(), vv.dim);
        }
        Command::Graph { videovecs, cal } => {
            let cal = cal.unwrap_or(ctx.cfg.cal);
            let graph = Stage::Graph.run(|| stages::graph(&VideoVectors::read(&videovecs)?, cal))?;
            graph.write(&ctx.out_file(GRAPH_FILE)?)?;
            println!("{} nodes, cal {cal}", graph.n());
        }
        Command::Cluster {
            graph,
            videovecs,
            solver,
        } => {
            let file = Stage::Cluster.run(|| {
                let graph = CostGraph::read(&graph)?;
                let ids = match &videovecs {
                    Some(p) => VideoVectors::read(p)?.ids(),
                    None => (0..graph.n()).map(|i| i.to_string()).collect(),
                };
                let result = stages::cluster(&graph, solver)?;
                ClustersFile::new(&ids, &result, None)
            })?;
            write_json(&ctx.out_file(CLUSTERS_FILE)?, &file)?;
            println!("{} clusters, objective {}", file.n_clusters, file.objective);
        }
        Command::Metrics { videovecs, clusters } => {
            let report = Stage::Metrics.run(|| {
                stages::metrics(&VideoVectors::read(&videovecs)?, &read_json(&clusters)?)
            })?;
            write_json(&ctx.out_file(REPORT_FILE)?, &report)?;
            println!("{} clusters, composite {:.4}", report.n_clusters, report.overall);
        }
        Command::Compare {
            a,
            b,
            videovecs,
            videovecs_b,
        } => {
            let report = Stage::Compare.run(|| {
                let vv_a = VideoVectors::read(&videovecs)?;
                let vv_b = match &videovecs_b {
                    Some(p) => VideoVectors::read(p)?,
                    None => vv_a.clone(),
                };
                stages::compare(&vv_a, &vv_b, &read_json(&a)?, &read_json(&b)?)
            })?;
            write_json(&ctx.out_file("comparison.json")?, &report)?;
            println!("variation of information {:.4}", report.variation_of_information);
        }
        Command::Sweep { videovecs, cals, solver } => {
            let cals = match cals {
                Some(s) => parse_cal_list(&s).map_err(anyhow::Error::msg)?,
                None if !ctx.cfg.sweep.is_empty() => ctx.cfg.sweep.clone(),
                None => parse_cal_list("0.1:0.9:0.1").expect("valid range"),
            };
            let vv = VideoVectors::read(&videovecs)?;
            let entries = sweep::run_sweep(&vv, &cals, solver)?;
            let dir = ctx.out_dir()?;
            sweep::write_sweep(&entries, &dir, &dir)?;
            for row in sweep::summary(&entries) {
                println!("cal {:.3}: {} clusters, composite {:.4}", row.cal, row.clusters, row.composite);
            }
        }
        Command::Pipeline {
            store,
            select,
            combine,
            cal,
            sweep,
            solver,
        } => {
            ctx.cfg.store = Some(ctx.store(&store)?);
            ctx.cfg.out = Some(ctx.out_dir()?);
            apply_select(&mut ctx.cfg, &select);
            apply_combine(&mut ctx.cfg, &combine);
            if let Some(c) = cal {
                ctx.cfg.cal = c;
            }
            if let Some(s) = sweep {
                ctx.cfg.sweep = parse_cal_list(&s).map_err(anyhow::Error::msg)?;
            }
            let outcome = run_pipeline(&ctx.cfg, solver)?;
            println!(
                "{} videos ({} duplicates), {} vectors, cal {}: {} clusters, composite {:.4}",
                outcome.videos,
                outcome.duplicates,
                outcome.vectors,
                outcome.cal,
                outcome.n_clusters,
                outcome.composite
            );
        }
        Command::Synth {
            videos,
            clusters,
            dim,
            sigma,
            frame_noise,
            shared,
            min_separation,
            duplicates,
        } => {
            let params = SynthParams {
                videos,
                clusters,
                dim,
                sigma,
                frame_noise,
                shared,
                min_separation,
                duplicates,
                seed: ctx.cfg.seed,
                ..SynthParams::default()
            };
            let s = synth::generate(&params)?;
            let dir = ctx.out_dir()?;
            write_store(&s.store, &dir)?;
            write_json(&dir.join("truth.json"), &s.truth)?;
            println!(
                "{} videos, {} frames, centers {:.1}σ apart",
                s.store.manifest.len(),
                s.store.frame_count(),
                s.truth.separation_sigma
            );
        }
    }
    Ok(())
}
