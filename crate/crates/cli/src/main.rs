use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hwnn::config::{RecipeItem, RunConfig};
use hwnn::data::{load_any, import_linqs, save_dataset, write_report};
use hwnn::model::{save_checkpoint, Mode};
use hwnn::pipeline::{self, assemble_all, build_snapshots, summarize};
use hwnn::synthetic::{planted_dataset, PlantedSpec};
use hwnn::validate::{run_validation, ValidateOptions};
use hwnn::Error;

/// Hypergraph wavelet neural networks: construction, training and checks.
#[derive(Parser, Debug)]
#[command(name = "hwnn", version)]
struct Cli {
    #[command(flatten)]
    global: Overrides,
    #[command(subcommand)]
    command: Command,
}

/// Flags override values from the config file.
#[derive(Args, Debug, Default)]
struct Overrides {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Dataset directory (native TSV or LINQS layout).
    #[arg(long, global = true)]
    dataset: Option<PathBuf>,
    /// Comma-separated recipe, e.g. `neighbor(3),cluster,community`.
    #[arg(long, global = true)]
    recipe: Option<String>,
    #[arg(long, global = true)]
    lr: Option<f64>,
    #[arg(long, global = true)]
    epochs: Option<usize>,
    /// Polynomial order of both wavelet operators.
    #[arg(long, global = true)]
    k_order: Option<usize>,
    /// Polynomial order of the inverse wavelet only; applied after `--k-order`.
    #[arg(long, global = true)]
    k_inv_order: Option<usize>,
    /// Heat-kernel scale.
    #[arg(long = "scale-s", global = true)]
    scale_s: Option<f64>,
    #[arg(long, global = true)]
    label_ratio: Option<f64>,
    /// `full`, `simplified` or `hgnn-baseline`.
    #[arg(long, global = true)]
    mode: Option<Mode>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the construction recipe and write the hypergraph with a summary.
    Build,
    /// Train, evaluate and write checkpoint, metrics, history and timing.
    Train {
        /// Instead of one run, train once per configured K (plus the exact basis).
        #[arg(long, conflicts_with = "paired")]
        sweep: bool,
        /// Train the configured mode and the baseline on identical inputs.
        #[arg(long)]
        paired: bool,
    },
    /// Run the operator, wavelet and gradient self-checks.
    Validate {
        #[arg(long, default_value_t = 200)]
        instances: usize,
        /// Perturb one entry of every sparse diffusion operator (negative control).
        #[arg(long, default_value_t = 0.0)]
        inject_theta_fault: f64,
        /// Print the full report as JSON instead of one line per check.
        #[arg(long)]
        json: bool,
    },
    /// Time the polynomial, exact and simplified paths.
    Bench,
    /// Convert a LINQS `*.content`/`*.cites` directory to the native layout.
    ImportLinqs { src: PathBuf, dst: PathBuf },
    /// Write a seeded planted-partition dataset in the native layout.
    Synthesize {
        dst: PathBuf,
        #[arg(long, default_value_t = 600)]
        nodes: usize,
        #[arg(long, default_value_t = 5)]
        classes: usize,
        #[arg(long, default_value_t = 300)]
        features: usize,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn resolve_config(o: &Overrides) -> Result<RunConfig, Failure> {
    let mut cfg = match &o.config {
        Some(p) => RunConfig::from_file(p).map_err(|e| Failure::Usage(e.to_string()))?,
        None => RunConfig::default(),
    };
    if let Some(v) = o.seed {
        cfg.seed = v;
    }
    if let Some(v) = o.threads {
        cfg.threads = v;
    }
    if let Some(v) = &o.out {
        cfg.out = v.clone();
    }
    if let Some(v) = &o.dataset {
        cfg.dataset = v.clone();
    }
    if let Some(v) = &o.recipe {
        cfg.recipe = RecipeItem::parse_list(v)?;
    }
    if let Some(v) = o.lr {
        cfg.train.lr = v;
    }
    if let Some(v) = o.epochs {
        cfg.train.epochs = v;
    }
    if let Some(v) = o.k_order {
        cfg.model.k_order = v;
        cfg.model.k_inv_order = v;
    }
    if let Some(v) = o.k_inv_order {
        cfg.model.k_inv_order = v;
    }
    if let Some(v) = o.scale_s {
        cfg.model.scale = v;
    }
    if let Some(v) = o.label_ratio {
        cfg.label_ratio = v;
    }
    if let Some(v) = o.mode {
        cfg.model.mode = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn load(cfg: &RunConfig) -> Result<hwnn::data::Dataset, Failure> {
    let d = load_any(&cfg.dataset)?;
    for w in d.warnings.messages() {
        eprintln!("warning: {w}");
    }
    Ok(d)
}

fn cmd_build(cfg: &RunConfig) -> Result<(), Failure> {
    let d = load(cfg)?;
    let snapshots = build_snapshots(&d, &cfg.recipe, &cfg.hypergraph, cfg.seed)?;
    let h = assemble_all(&snapshots)?;
    fs::create_dir_all(&cfg.out)?;
    let mut file = std::io::BufWriter::new(fs::File::create(cfg.out.join("hypergraph.tsv"))?);
    h.write_tsv(&mut file)?;
    let summary = summarize(&snapshots);
    write_json(
        &cfg.out.join("summary.json"),
        &serde_json::json!({
            "dataset": d.name,
            "nodes": d.num_nodes(),
            "snapshot_count": snapshots.len(),
            "hyperedges": h.num_edges(),
            "snapshots": summary,
        }),
    )?;
    println!("{} nodes, {} snapshots, {} hyperedges", d.num_nodes(), snapshots.len(), h.num_edges());
    for s in &summary {
        println!(
            "  {:<24} {:>6} hyperedges  mean size {:>8.2}  isolated {}",
            s.tag, s.hyperedges, s.mean_hyperedge_size, s.isolated_nodes
        );
    }
    Ok(())
}

fn cmd_train(cfg: &RunConfig, sweep: bool, paired: bool) -> Result<(), Failure> {
    let d = load(cfg)?;
    if sweep {
        let rows = pipeline::k_sweep(&d, cfg)?;
        let table = pipeline::sweep_table(&rows);
        fs::create_dir_all(&cfg.out)?;
        fs::write(cfg.out.join("k_sweep.tsv"), &table)?;
        print!("{table}");
        return Ok(());
    }
    if paired {
        let runs = pipeline::paired_baseline(&d, cfg)?;
        write_json(&cfg.out.join("paired.json"), &runs)?;
        for r in &runs {
            println!("{:<14} test accuracy {:.4}  train {:.2}s", r.mode.to_string(), r.test_accuracy, r.train_seconds);
        }
        return Ok(());
    }
    let run = pipeline::run(&d, cfg)?;
    fs::create_dir_all(&cfg.out)?;
    save_checkpoint(
        &run.model,
        serde_json::json!({ "dataset": d.name, "seed": cfg.seed, "best_epoch": run.history.best_epoch }),
        &cfg.out.join("model.ckpt"),
    )?;
    write_report(&cfg.out, &run.report, &run.history, &run.timing_report())?;
    for (set, m) in &run.report.metrics {
        println!(
            "{set:<5} accuracy {:.4}  macro-F1 {:.4}  micro-F1 {:.4}  (n={})",
            m.accuracy, m.macro_f1, m.micro_f1, m.support
        );
    }
    println!(
        "best epoch {} (val accuracy {:.4}), {:.1}s training",
        run.history.best_epoch, run.history.best_val_acc, run.timing.train_seconds
    );
    Ok(())
}

fn cmd_validate(cfg: &RunConfig, instances: usize, fault: f64, json: bool) -> Result<bool, Failure> {
    let opts = ValidateOptions {
        seed: cfg.seed,
        instances,
        scale: cfg.model.scale,
        theta_fault: fault,
        ..ValidateOptions::default()
    };
    let report = run_validation(&opts)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        for c in &report.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            println!("{status} {:<48} measured {:.3e}  bound {:.3e}  {}", c.invariant, c.measured, c.bound, c.detail);
        }
        println!("failures: {}", serde_json::to_string(&report.failures)?);
    }
    Ok(report.passed)
}

fn cmd_bench(cfg: &RunConfig) -> Result<(), Failure> {
    let d = load(cfg)?;
    let b = pipeline::bench(&d, cfg)?;
    write_json(&cfg.out.join("bench.json"), &b)?;
    println!("{} epochs on {} nodes", b.epochs, b.num_nodes);
    for p in &b.paths {
        println!(
            "  {:<11} setup {:>8.3}s  train {:>8.3}s  total {:>8.3}s  test accuracy {:.4}",
            p.label, p.setup_seconds, p.train_seconds, p.total_seconds, p.test_accuracy
        );
    }
    match b.speedup {
        Some(s) => println!("speed-up of the polynomial path over the exact path: {s:.2}x"),
        None => println!("exact path skipped: graph exceeds the eigendecomposition cap"),
    }
    println!("simplified / full wall-clock: {:.3}", b.simplified_over_full);
    Ok(())
}

fn dispatch(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::ImportLinqs { src, dst } => {
            let d = import_linqs(&src)?;
            for w in d.warnings.messages() {
                eprintln!("warning: {w}");
            }
            save_dataset(&d, &dst)?;
            println!("{} nodes, {} edges, {} classes", d.num_nodes(), d.graph.num_edges(), d.num_classes());
            return Ok(true);
        }
        Command::Synthesize { dst, nodes, classes, features } => {
            let seed = cli.global.seed.unwrap_or(0);
            let spec = PlantedSpec {
                nodes,
                classes,
                features,
                ..PlantedSpec::default()
            };
            if classes == 0 || features < classes || nodes < classes {
                return Err(Failure::Usage("need nodes >= classes, features >= classes and classes >= 1".into()));
            }
            save_dataset(&planted_dataset(&spec, seed)?, &dst)?;
            return Ok(true);
        }
        _ => {}
    }
    let cfg = resolve_config(&cli.global)?;
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    match cli.command {
        Command::Build => cmd_build(&cfg).map(|_| true),
        Command::Train { sweep, paired } => cmd_train(&cfg, sweep, paired).map(|_| true),
        Command::Validate {
            instances,
            inject_theta_fault,
            json,
        } => cmd_validate(&cfg, instances, inject_theta_fault, json),
        Command::Bench => cmd_bench(&cfg).map(|_| true),
        Command::ImportLinqs { .. } | Command::Synthesize { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
