//! End-to-end runs: hypergraph construction from a recipe, training and
//! evaluation, the K sweep, paired baseline runs and timing benchmarks.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{HypergraphOptions, RecipeItem, RunConfig};
use crate::construct::{
    self, attribute_hyperedges, cluster_hyperedges, community_hyperedges_tagged, metapath_snapshot,
    neighbor_hyperedges_tagged, MetaPath, SimpleGraph, COMMUNITY_TAG, NEIGHBOR_TAG,
};
use crate::data::{split_by_ratio, Dataset, RunReport, TimingReport};
use crate::error::{Error, Result};
use crate::hypergraph::{Hypergraph, Snapshot};
use crate::model::{evaluate, train, Basis, History, LabeledSplit, Mode, Model, ModelConfig, SnapshotOperator};
use crate::sparse::CsrMatrix;

fn graph_for(d: &Dataset, metapath: &Option<String>) -> Result<SimpleGraph> {
    match metapath {
        Some(p) => metapath_snapshot(&d.graph, &MetaPath::parse(p)?),
        None => Ok(d.graph.clone()),
    }
}

fn tag_for(base: &str, metapath: &Option<String>) -> String {
    match metapath {
        Some(p) => format!("{base}:{p}"),
        None => base.to_string(),
    }
}

/// Default cluster count: the number of classes, or `⌈√n⌉` without labels.
pub fn default_cluster_count(d: &Dataset) -> usize {
    if d.num_classes() > 0 {
        d.num_classes()
    } else {
        (d.num_nodes() as f64).sqrt().ceil() as usize
    }
}

fn run_item(d: &Dataset, item: &RecipeItem, seed: u64) -> Result<Vec<Snapshot>> {
    match item {
        RecipeItem::Neighbor { phi, metapath } => {
            let g = graph_for(d, metapath)?;
            Ok(vec![neighbor_hyperedges_tagged(&g, *phi, &tag_for(NEIGHBOR_TAG, metapath))?])
        }
        RecipeItem::Attribute => {
            if d.attributes.is_empty() {
                return Err(Error::Config("recipe asks for attribute hyperedges but the dataset has no attributes".into()));
            }
            attribute_hyperedges(&d.attributes)
        }
        RecipeItem::Cluster { k } => {
            let k = k.unwrap_or_else(|| default_cluster_count(d));
            Ok(vec![cluster_hyperedges(&d.features, k, seed)?])
        }
        RecipeItem::Community { metapath } => {
            let g = graph_for(d, metapath)?;
            Ok(vec![community_hyperedges_tagged(&g, seed, &tag_for(COMMUNITY_TAG, metapath))?])
        }
    }
}

/// Runs every recipe item (concurrently) and returns the snapshots in recipe order.
pub fn build_snapshots(d: &Dataset, recipe: &[RecipeItem], opts: &HypergraphOptions, seed: u64) -> Result<Vec<Snapshot>> {
    if recipe.is_empty() {
        return Err(Error::Config("construction recipe is empty".into()));
    }
    let parts: Vec<Vec<Snapshot>> = recipe.par_iter().map(|item| run_item(d, item, seed)).collect::<Result<_>>()?;
    let mut snapshots: Vec<Snapshot> = parts.into_iter().flatten().collect();
    if opts.isolated_self_loops {
        for s in &mut snapshots {
            let h = s.hypergraph.with_isolated_self_loops(&s.type_tag)?;
            *s = Snapshot::new(h, s.type_tag.clone())?;
        }
    }
    // Rejects duplicate tags.
    construct::assemble(&snapshots)?;
    Ok(snapshots)
}

/// The heterogeneous hypergraph holding every snapshot.
pub fn assemble_all(snapshots: &[Snapshot]) -> Result<Hypergraph> {
    construct::assemble(snapshots)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotSummary {
    pub tag: String,
    pub hyperedges: usize,
    pub isolated_nodes: usize,
    pub mean_hyperedge_size: f64,
}

pub fn summarize(snapshots: &[Snapshot]) -> Vec<SnapshotSummary> {
    snapshots
        .iter()
        .map(|s| {
            let h = &s.hypergraph;
            let total: usize = h.edges().iter().map(|e| e.members.len()).sum();
            SnapshotSummary {
                tag: s.type_tag.clone(),
                hyperedges: h.num_edges(),
                isolated_nodes: h.isolated_nodes().len(),
                mean_hyperedge_size: total as f64 / h.num_edges() as f64,
            }
        })
        .collect()
}

/// Model inputs: sparse node features, or the identity for free embeddings.
pub fn feature_input(d: &Dataset, free_embedding: bool) -> CsrMatrix {
    if free_embedding || d.features.ncols() == 0 {
        CsrMatrix::identity(d.num_nodes())
    } else {
        CsrMatrix::from_dense(d.features.view())
    }
}

// Independent streams for the different consumers of the run seed.
fn init_seed(seed: u64) -> u64 {
    seed ^ 0x9E37_79B9_7F4A_7C15
}

pub struct TrainRun {
    pub model: Model,
    pub split: LabeledSplit,
    pub history: History,
    pub report: RunReport,
    pub timing: TrainTiming,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainTiming {
    /// Operator construction, including any eigendecomposition.
    pub setup_seconds: f64,
    pub train_seconds: f64,
}

impl TrainRun {
    pub fn test_accuracy(&self) -> f64 {
        self.report.metrics["test"].accuracy
    }

    pub fn timing_report(&self) -> TimingReport {
        let mut t = TimingReport::from_history(&self.history);
        t.extra.insert("setup_seconds".into(), self.timing.setup_seconds);
        t.extra.insert("train_seconds".into(), self.timing.train_seconds);
        t
    }
}

/// Trains and evaluates one model on prepared snapshots.
pub fn train_on(d: &Dataset, snapshots: &[Snapshot], cfg: &RunConfig, model_cfg: &ModelConfig) -> Result<TrainRun> {
    let split = split_by_ratio(&d.labels, d.num_classes(), cfg.label_ratio, cfg.seed)?;
    let x = feature_input(d, cfg.free_embedding);
    let t0 = Instant::now();
    let ops = SnapshotOperator::build_all(snapshots, model_cfg)?;
    let mut model = Model::new(model_cfg.clone(), ops, x.ncols(), d.num_classes(), init_seed(cfg.seed))?;
    let setup_seconds = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let history = train(&mut model, &x, &split, &cfg.train_config())?;
    let train_seconds = t1.elapsed().as_secs_f64();
    let probs = model.predict(&x)?;
    let mut metrics = BTreeMap::new();
    for (name, nodes) in [("train", &split.train), ("val", &split.val), ("test", &split.test)] {
        metrics.insert(name.to_string(), evaluate(&probs, &split.labels, nodes));
    }
    let mut echo = cfg.clone();
    echo.model = model_cfg.clone();
    let report = RunReport {
        dataset: d.name.clone(),
        metrics,
        best_epoch: history.best_epoch,
        best_val_acc: history.best_val_acc,
        config: serde_json::to_value(&echo)?,
    };
    Ok(TrainRun {
        model,
        split,
        history,
        report,
        timing: TrainTiming {
            setup_seconds,
            train_seconds,
        },
    })
}

/// Builds the recipe's snapshots and trains with the configured model.
pub fn run(d: &Dataset, cfg: &RunConfig) -> Result<TrainRun> {
    cfg.validate()?;
    let snapshots = build_snapshots(d, &cfg.recipe, &cfg.hypergraph, cfg.seed)?;
    train_on(d, &snapshots, cfg, &cfg.model)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// `"1"`, `"2"`, … or `"exact"`.
    pub order: String,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

/// Trains once per polynomial order (`K = K′`), then once with the exact
/// wavelet basis when requested and the graph is under the eigen cap.
pub fn k_sweep(d: &Dataset, cfg: &RunConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let snapshots = build_snapshots(d, &cfg.recipe, &cfg.hypergraph, cfg.seed)?;
    let mut variants: Vec<(String, ModelConfig)> = cfg
        .sweep_orders
        .iter()
        .map(|&k| {
            (
                k.to_string(),
                ModelConfig {
                    mode: Mode::Full,
                    basis: Basis::Polynomial,
                    k_order: k,
                    k_inv_order: k,
                    ..cfg.model.clone()
                },
            )
        })
        .collect();
    if cfg.sweep_exact && d.num_nodes() <= cfg.model.eigen_cap {
        variants.push((
            "exact".into(),
            ModelConfig {
                mode: Mode::Full,
                basis: Basis::Exact,
                ..cfg.model.clone()
            },
        ));
    }
    variants
        .into_iter()
        .map(|(order, mc)| {
            let r = train_on(d, &snapshots, cfg, &mc)?;
            let m = r.report.metrics["test"];
            Ok(SweepRow {
                order,
                accuracy: m.accuracy,
                macro_precision: m.macro_precision,
                macro_recall: m.macro_recall,
                macro_f1: m.macro_f1,
            })
        })
        .collect()
}

pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut s = String::from("K\taccuracy\tprecision\trecall\tf1\n");
    for r in rows {
        s.push_str(&format!(
            "{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}\n",
            r.order, r.accuracy, r.macro_precision, r.macro_recall, r.macro_f1
        ));
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathTiming {
    pub label: String,
    pub setup_seconds: f64,
    pub train_seconds: f64,
    pub total_seconds: f64,
    pub test_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub epochs: usize,
    pub num_nodes: usize,
    pub paths: Vec<PathTiming>,
    /// Exact-path time over polynomial-path time, when both ran.
    pub speedup: Option<f64>,
    /// Simplified-mode time over full-mode time.
    pub simplified_over_full: f64,
}

fn timed(label: &str, d: &Dataset, snaps: &[Snapshot], cfg: &RunConfig, mc: ModelConfig) -> Result<PathTiming> {
    let r = train_on(d, snaps, cfg, &mc)?;
    Ok(PathTiming {
        label: label.into(),
        setup_seconds: r.timing.setup_seconds,
        train_seconds: r.timing.train_seconds,
        total_seconds: r.timing.setup_seconds + r.timing.train_seconds,
        test_accuracy: r.test_accuracy(),
    })
}

/// Times `bench_epochs` epochs of the polynomial wavelet path, the exact
/// eigendecomposition path (when under the cap) and the simplified mode on
/// the same snapshots. Setup time, eigendecomposition included, counts
/// towards each path.
pub fn bench(d: &Dataset, cfg: &RunConfig) -> Result<BenchReport> {
    let mut cfg = cfg.clone();
    cfg.train.epochs = cfg.bench_epochs;
    cfg.validate()?;
    let snapshots = build_snapshots(d, &cfg.recipe, &cfg.hypergraph, cfg.seed)?;
    let full = ModelConfig {
        mode: Mode::Full,
        basis: Basis::Polynomial,
        ..cfg.model.clone()
    };
    let poly = timed("polynomial", d, &snapshots, &cfg, full.clone())?;
    let exact = if d.num_nodes() <= cfg.model.eigen_cap {
        Some(timed(
            "exact",
            d,
            &snapshots,
            &cfg,
            ModelConfig {
                basis: Basis::Exact,
                ..full.clone()
            },
        )?)
    } else {
        None
    };
    let simplified = timed(
        "simplified",
        d,
        &snapshots,
        &cfg,
        ModelConfig {
            mode: Mode::Simplified,
            ..full
        },
    )?;
    let speedup = exact.as_ref().map(|e| e.total_seconds / poly.total_seconds);
    let simplified_over_full = simplified.total_seconds / poly.total_seconds;
    let mut paths = vec![poly];
    paths.extend(exact);
    paths.push(simplified);
    Ok(BenchReport {
        epochs: cfg.bench_epochs,
        num_nodes: d.num_nodes(),
        paths,
        speedup,
        simplified_over_full,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedRun {
    pub mode: Mode,
    pub test_accuracy: f64,
    pub train_seconds: f64,
}

/// The configured model and the `Θ X W` baseline on identical snapshots and splits.
pub fn paired_baseline(d: &Dataset, cfg: &RunConfig) -> Result<Vec<PairedRun>> {
    cfg.validate()?;
    let snapshots = build_snapshots(d, &cfg.recipe, &cfg.hypergraph, cfg.seed)?;
    [cfg.model.mode, Mode::HgnnBaseline]
        .into_iter()
        .map(|mode| {
            let r = train_on(
                d,
                &snapshots,
                cfg,
                &ModelConfig {
                    mode,
                    ..cfg.model.clone()
                },
            )?;
            Ok(PairedRun {
                mode,
                test_accuracy: r.test_accuracy(),
                train_seconds: r.timing.train_seconds,
            })
        })
        .collect()
}
