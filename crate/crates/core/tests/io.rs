use std::fs;
use std::path::Path;

use hwnn::config::RunConfig;
use hwnn::data::{import_linqs, load_any, load_dataset, read_metrics, save_dataset, write_report};
use hwnn::model::{load_checkpoint, save_checkpoint};
use hwnn::pipeline::{assemble_all, build_snapshots, run};
use hwnn::synthetic::{planted_dataset, random_hypergraph, PlantedSpec};
use hwnn::{Error, Hypergraph};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn small_dataset() -> hwnn::data::Dataset {
    planted_dataset(
        &PlantedSpec {
            nodes: 60,
            features: 20,
            ..PlantedSpec::default()
        },
        3,
    )
    .unwrap()
}

#[test]
fn native_layout_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let d = small_dataset();
    save_dataset(&d, dir.path()).unwrap();
    let mut back = load_dataset(dir.path()).unwrap();
    // The name of a loaded dataset is its directory name.
    back.name = d.name.clone();
    assert_eq!(back, d);
    assert_eq!(back.warnings.messages(), Vec::<String>::new());
    // Saving what was loaded reproduces the files byte for byte.
    let again = tempfile::tempdir().unwrap();
    save_dataset(&back, again.path()).unwrap();
    for f in ["nodes.tsv", "edges.tsv", "features.tsv"] {
        assert_eq!(fs::read(dir.path().join(f)).unwrap(), fs::read(again.path().join(f)).unwrap(), "{f}");
    }
}

#[test]
fn hypergraph_tsv_round_trips() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let h = random_hypergraph(&mut rng, 25, 12, 5, 2.0, &["x", "y"]);
    let mut buf = Vec::new();
    h.write_tsv(&mut buf).unwrap();
    let back = Hypergraph::read_tsv(buf.as_slice(), Path::new("mem"), None).unwrap();
    assert_eq!(back, h);
}

#[test]
fn built_hypergraph_survives_the_file_format() {
    let d = small_dataset();
    let cfg = RunConfig::default();
    let snaps = build_snapshots(&d, &cfg.recipe, &cfg.hypergraph, 0).unwrap();
    let h = assemble_all(&snaps).unwrap();
    let mut buf = Vec::new();
    h.write_tsv(&mut buf).unwrap();
    let back = Hypergraph::read_tsv(buf.as_slice(), Path::new("mem"), None).unwrap();
    assert_eq!(back.edges(), h.edges());
    assert_eq!(back.weights(), h.weights());
}

#[test]
fn linqs_import_matches_native_export() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("tiny.content"),
        "p1\t1\t0\t0\tAlpha\np2\t0\t1\t0\tBeta\np3\t0\t0\t1\tAlpha\np4\t1\t1\t0\tGamma\n",
    )
    .unwrap();
    fs::write(dir.path().join("tiny.cites"), "p1\tp2\np2\tp3\np3\tp1\np4\tp1\np4\tghost\n").unwrap();
    let d = import_linqs(dir.path()).unwrap();
    assert_eq!(d.num_nodes(), 4);
    assert_eq!(d.graph.num_edges(), 4);
    assert_eq!(d.class_names, ["Alpha", "Beta", "Gamma"]);
    assert_eq!(d.labels, [Some(0), Some(1), Some(0), Some(2)]);
    assert_eq!(d.warnings.dangling_edges, 1);
    assert_eq!(d.features.ncols(), 3);

    assert_eq!(d.name, "tiny");
    let native = tempfile::tempdir().unwrap();
    save_dataset(&d, native.path()).unwrap();
    let mut back = load_any(native.path()).unwrap();
    back.name = d.name.clone();
    assert_eq!(back, d);
    assert_eq!(load_any(dir.path()).unwrap(), d);
}

#[test]
fn loader_errors_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(load_dataset(dir.path()), Err(Error::MissingFile(_))));
    fs::write(dir.path().join("nodes.tsv"), "a\tp\tx\nb\tp\ty\n").unwrap();
    fs::write(dir.path().join("edges.tsv"), "a\tb\tcites\na\tzz\tcites\n").unwrap();
    fs::write(dir.path().join("features.tsv"), "a\t1,0\nb\t0,1\n").unwrap();
    match load_dataset(dir.path()) {
        Err(Error::UnknownNode { line, id, .. }) => assert_eq!((line, id.as_str()), (2, "zz")),
        other => panic!("{other:?}"),
    }
    fs::write(dir.path().join("edges.tsv"), "a\tb\tcites\n").unwrap();
    fs::write(dir.path().join("features.tsv"), "a\t1,0\nb\t0,1,1\n").unwrap();
    assert!(matches!(load_dataset(dir.path()), Err(Error::RaggedFeatures { line: 2, .. })));
}

#[test]
fn reports_and_checkpoints_reproduce() {
    let d = small_dataset();
    let mut cfg = RunConfig::default();
    cfg.train.epochs = 8;
    cfg.model.hidden = 8;
    cfg.model.head_hidden = 8;
    let a = run(&d, &cfg).unwrap();
    let b = run(&d, &cfg).unwrap();
    let (da, db) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let pa = write_report(da.path(), &a.report, &a.history, &a.timing_report()).unwrap();
    let pb = write_report(db.path(), &b.report, &b.history, &b.timing_report()).unwrap();
    assert_eq!(fs::read(&pa.metrics).unwrap(), fs::read(&pb.metrics).unwrap());
    assert_eq!(fs::read(&pa.history).unwrap(), fs::read(&pb.history).unwrap());
    assert_eq!(read_metrics(&pa.metrics).unwrap(), a.report);
    let csv = fs::read_to_string(&pa.history).unwrap();
    assert_eq!(csv.lines().next(), Some("epoch,train_loss,val_acc"));
    assert_eq!(csv.lines().count(), 9);

    let ckpt = da.path().join("model.ckpt");
    save_checkpoint(&a.model, serde_json::json!({"seed": 0}), &ckpt).unwrap();
    let mut other = b.model.clone();
    other.params = other.params.zeros_like();
    let header = load_checkpoint(&mut other, &ckpt).unwrap();
    assert_eq!(other.params, a.model.params);
    assert!(header.tensors.iter().any(|t| t.name == "proj/neighbor"));
    assert!(header.tensors.iter().any(|t| t.name == "poly/community/theta_inv"));
    assert!(header.tensors.iter().any(|t| t.name == "head/3"));
}
