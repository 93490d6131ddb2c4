//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when an evaluated, gated criterion fails.
//!
//! Criteria that need the Cora citation dataset look for it in
//! `$HWNN_CORA_DIR`, then in `<workspace>/data/cora` (native or LINQS layout).
//! Without it they are reported as FAIL (not evaluated) and do not change the
//! exit status unless `HWNN_ACCEPTANCE_STRICT=1`.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use hwnn::config::RunConfig;
use hwnn::construct::{cluster_hyperedges, kmeans, louvain, neighbor_hyperedges, FeatureMatrix, SimpleGraph};
use hwnn::data::{load_any, Dataset};
use hwnn::hypergraph::{laplacian, normalized_adjacency, theta, unnormalized_adjacency};
use hwnn::model::{baseline_hgnn_layer, layer_forward, Activation, LayerParams, Mode, Model, ModelConfig};
use hwnn::pipeline::{bench, build_snapshots, run, train_on};
use hwnn::spectral::{apply_poly, eigendecompose, exact_wavelets, PolyWavelets};
use hwnn::synthetic::{planted_dataset, random_hypergraph, PlantedSpec};
use hwnn::{CsrMatrix, DiffusionOperator, Hypergraph, Snapshot};
use ndarray::{Array1, Array2};
use proptest::strategy::Strategy;
use proptest::test_runner::{Config as ProptestConfig, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Status {
    Pass,
    Fail,
    /// Failed, but within the stated noise allowance; reported, not gated.
    FailUngated,
    NotEvaluated,
}

struct Outcome {
    status: Status,
    detail: String,
}

impl Outcome {
    fn check(ok: bool, detail: impl Into<String>) -> Self {
        Self {
            status: if ok { Status::Pass } else { Status::Fail },
            detail: detail.into(),
        }
    }
}

// ---------------------------------------------------------------- oracles

/// Entrywise `Θ` and `A^h` from the incidence definition.
fn oracle_operators(h: &Hypergraph) -> (Array2<f64>, Array2<f64>) {
    let n = h.num_nodes();
    let mut inc = vec![vec![0.0; h.num_edges()]; n];
    for (e, edge) in h.edges().iter().enumerate() {
        for &v in &edge.members {
            inc[v][e] = 1.0;
        }
    }
    let w = h.weights();
    let size: Vec<f64> = (0..h.num_edges()).map(|e| (0..n).map(|v| inc[v][e]).sum()).collect();
    let deg: Vec<f64> = (0..n).map(|v| (0..h.num_edges()).map(|e| w[e] * inc[v][e]).sum()).collect();
    let mut th = Array2::zeros((n, n));
    let mut adj = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            let s: f64 = (0..h.num_edges()).map(|e| w[e] * inc[i][e] * inc[j][e] / size[e]).sum();
            adj[[i, j]] = s - if i == j { deg[i] } else { 0.0 };
            if deg[i] > 0.0 && deg[j] > 0.0 {
                th[[i, j]] = s / (deg[i].sqrt() * deg[j].sqrt());
            }
        }
    }
    (th, adj)
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
fn jacobi(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    let mut a = a.clone();
    let mut v = Array2::<f64>::eye(n);
    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().max(1e-300);
    for _ in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[[i, j]].powi(2)).sum();
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[[p, q]].abs() < 1e-300 {
                    continue;
                }
                let th = (a[[q, q]] - a[[p, p]]) / (2.0 * a[[p, q]]);
                let t = th.signum() / (th.abs() + (th * th + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[[k, p]], a[[k, q]]);
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[[p, k]], a[[q, k]]);
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[[k, p]], v[[k, q]]);
                    v[[k, p]] = c * vkp - s * vkq;
                    v[[k, q]] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[[i, i]]).collect(), v)
}

fn spectral_fn(vals: &[f64], vecs: &Array2<f64>, f: impl Fn(f64) -> f64) -> Array2<f64> {
    let d = Array2::from_diag(&Array1::from_iter(vals.iter().map(|&l| f(l))));
    vecs.dot(&d).dot(&vecs.t())
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// All-pairs hop distances by Floyd–Warshall.
fn floyd(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let inf = usize::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &(u, v) in edges {
        d[u][v] = 1;
        d[v][u] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// Newman modularity `Q = Σ_c [L_c/m − (D_c/2m)²]` of an unweighted graph.
fn newman_modularity(n: usize, edges: &[(usize, usize)], membership: &[usize]) -> f64 {
    let m = edges.len() as f64;
    let k = membership.iter().max().map_or(0, |c| c + 1);
    let mut inside = vec![0.0; k];
    let mut degree = vec![0.0; k];
    let mut deg = vec![0.0; n];
    for &(u, v) in edges {
        deg[u] += 1.0;
        deg[v] += 1.0;
        if membership[u] == membership[v] {
            inside[membership[u]] += 1.0;
        }
    }
    for v in 0..n {
        degree[membership[v]] += deg[v];
    }
    (0..k).map(|c| inside[c] / m - (degree[c] / (2.0 * m)).powi(2)).sum()
}

fn random_edges(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                e.push((u, v));
            }
        }
    }
    e
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

// --------------------------------------------------------------- criteria

fn operator_equivalence() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(1..=50);
        let m = rng.random_range(1..=20);
        let h = random_hypergraph(&mut rng, n, m, n.min(10), 2.0, &["a", "b"]);
        let (th, adj) = oracle_operators(&h);
        let id = Array2::<f64>::eye(n);
        let t = theta(&h);
        worst = worst
            .max(max_abs_diff(&t.matrix.to_dense(), &th))
            .max(max_abs_diff(&laplacian(&t).matrix.to_dense(), &(&id - &th)))
            .max(max_abs_diff(&unnormalized_adjacency(&h).matrix.to_dense(), &adj))
            .max(max_abs_diff(&normalized_adjacency(&h).matrix.to_dense(), &(&th - &id)));
    }
    let secs = t0.elapsed().as_secs_f64();
    Outcome::check(
        worst <= 1e-10 && secs < 10.0,
        format!("max entry error {worst:.2e} (tol 1e-10) over 200 hypergraphs in {secs:.2}s (limit 10s)"),
    )
}

fn theta_identity_property() -> Outcome {
    let mut runner = TestRunner::new(ProptestConfig {
        cases: 512,
        failure_persistence: None,
        ..ProptestConfig::default()
    });
    let strategy = (1usize..=50, 1usize..=20, proptest::num::u64::ANY).prop_map(|(n, m, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_hypergraph(&mut rng, n, m, n.min(10), 2.0, &["a"])
    });
    let worst = std::cell::Cell::new(0.0f64);
    let result = runner.run(&strategy, |h| {
        let lhs = theta(&h).matrix.add_scaled(1.0, &CsrMatrix::identity(h.num_nodes()), -1.0).to_dense();
        let rhs = normalized_adjacency(&h).matrix.to_dense();
        let err = max_abs_diff(&lhs, &rhs);
        worst.set(worst.get().max(err));
        if err <= 1e-12 {
            Ok(())
        } else {
            Err(TestCaseError::fail(format!("error {err:e} on {} nodes", h.num_nodes())))
        }
    });
    match result {
        Ok(()) => Outcome::check(true, format!("512 generated cases, max error {:.2e} (tol 1e-12)", worst.get())),
        Err(e) => Outcome::check(false, format!("property failed: {e}")),
    }
}

fn wavelet_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut inv_err, mut spec_err, mut worst_margin) = (0.0f64, 0.0f64, f64::NEG_INFINITY);
    let mut bound_note = String::new();
    for inst in 0..12 {
        let n = rng.random_range(5..=50);
        let m = rng.random_range(2..=n);
        let h = random_hypergraph(&mut rng, n, m, 6, 2.0, &["a"]);
        let t = theta(&h);
        let delta = laplacian(&t);
        let s = [0.5, 1.0, 2.0][inst % 3];
        let ew = exact_wavelets(&eigendecompose(&delta, 3000).unwrap(), s).unwrap();
        inv_err = inv_err.max(max_abs_diff(&ew.psi.dot(&ew.psi_inv), &Array2::eye(n)));

        let (mut lam, vecs) = jacobi(&delta.matrix.to_dense());
        let (mut psi_eigs, _) = jacobi(&ew.psi);
        psi_eigs.sort_by(f64::total_cmp);
        let mut expected: Vec<f64> = lam.iter().map(|l| (-l * s).exp()).collect();
        expected.sort_by(f64::total_cmp);
        spec_err = psi_eigs.iter().zip(&expected).fold(spec_err, |m, (a, b)| m.max((a - b).abs()));

        let psi_oracle = spectral_fn(&lam, &vecs, |l| (-l * s).exp());
        lam.sort_by(f64::total_cmp);
        let lambda_max = *lam.last().unwrap();
        let op = Arc::new(DiffusionOperator::build(&h));
        for k in 1..=4 {
            let pw = PolyWavelets::taylor(op.clone(), s, k, k).unwrap();
            let poly = apply_poly(&pw, Array2::<f64>::eye(n).view(), false).unwrap();
            let diff = &poly - &psi_oracle;
            let (ev, _) = jacobi(&((&diff + &diff.t()) * 0.5));
            let norm = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let x = lambda_max * s;
            let bound = (1..=k + 1).fold(1.0, |acc, j| acc * x / j as f64) + 1e-8;
            if norm - bound > worst_margin {
                worst_margin = norm - bound;
                bound_note = format!("tightest: n={n} s={s} K={k} norm {norm:.3e} vs bound {bound:.3e}");
            }
        }
    }
    Outcome::check(
        inv_err <= 1e-8 && spec_err <= 1e-8 && worst_margin <= 0.0,
        format!("inverse err {inv_err:.2e}, spectrum err {spec_err:.2e} (tol 1e-8); residual bound held, {bound_note}"),
    )
}

fn degeneration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut mismatches = 0usize;
    let mut total = 0usize;
    for trial in 0..20 {
        let n = rng.random_range(3..=40);
        let m = rng.random_range(1..=15);
        let h = random_hypergraph(&mut rng, n, m, 6, 2.0, &["a"]);
        let op = Arc::new(if trial % 2 == 0 {
            DiffusionOperator::assembled(&h)
        } else {
            DiffusionOperator::factored(&h)
        });
        let pw = PolyWavelets::new(op.clone(), vec![0.0, 1.0], vec![1.0], 1.0).unwrap();
        let x = Array2::from_shape_simple_fn((n, 6), || rng.random_range(-1.0..1.0));
        let params = LayerParams {
            filter: Array1::ones(n),
            w: Array2::eye(6),
        };
        for act in [Activation::Identity, Activation::Relu] {
            let wave = layer_forward(&params, &pw, x.view(), act).unwrap();
            let base = baseline_hgnn_layer(op.as_ref(), x.view(), params.w.view(), act).unwrap();
            mismatches += wave.iter().zip(&base).filter(|(a, b)| a.to_bits() != b.to_bits()).count();
            total += wave.len();
        }
    }
    Outcome::check(mismatches == 0, format!("{mismatches} of {total} entries differ in bits over 20 instances"))
}

fn gradient_checks() -> Outcome {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 12;
    let snaps: Vec<Snapshot> = ["cites", "cluster"]
        .iter()
        .map(|t| Snapshot::new(random_hypergraph(&mut rng, n, 4, 4, 2.0, &[t]), *t).unwrap())
        .collect();
    let x = CsrMatrix::from_dense(Array2::from_shape_simple_fn((n, 5), || rng.random_range(-1.0..1.0)).view());
    let targets: Vec<(usize, usize)> = (0..9).map(|v| (v, v % 3)).collect();
    let step = 1e-5;
    let mut worst = (0.0f64, String::new());
    let mut tensors = 0;
    for mode in [Mode::Full, Mode::Simplified, Mode::HgnnBaseline] {
        let cfg = ModelConfig {
            mode,
            hidden: 6,
            head_hidden: 5,
            dropout: 0.25,
            eta: 0.01,
            ..ModelConfig::default()
        };
        let model = Model::from_snapshots(cfg, &snaps, 5, 3, 13).unwrap();
        let fwd = model.forward(&x, Some(99)).unwrap();
        let analytic = model.backward(&x, &fwd, &targets);
        let mut probe = model.clone();
        for (i, (name, grad)) in analytic.named().into_iter().enumerate() {
            tensors += 1;
            let mut numeric = Vec::new();
            for j in 0..grad.len() {
                let orig = *model.params.named()[i].1.iter().nth(j).unwrap();
                let mut loss_at = |v: f64| {
                    *probe.params.named_mut()[i].1.iter_mut().nth(j).unwrap() = v;
                    let f = probe.forward(&x, Some(99)).unwrap();
                    probe.loss(&f, &targets)
                };
                let up = loss_at(orig + step);
                let down = loss_at(orig - step);
                loss_at(orig);
                numeric.push((up - down) / (2.0 * step));
            }
            let diff = grad.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let scale = grad
                .iter()
                .map(|a| a * a)
                .sum::<f64>()
                .sqrt()
                .max(numeric.iter().map(|a| a * a).sum::<f64>().sqrt());
            let rel = if scale == 0.0 { diff } else { diff / scale };
            if !(rel <= worst.0) {
                worst = (rel, format!("{mode}/{name}"));
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    Outcome::check(
        worst.0 < 1e-5 && secs < 60.0,
        format!(
            "{tensors} tensors in 3 modes, worst relative error {:.2e} at {} (tol 1e-5), {secs:.2}s (limit 60s)",
            worst.0, worst.1
        ),
    )
}

fn construction_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut problems = Vec::new();
    let mut cases = 0;
    for trial in 0..30 {
        let n = rng.random_range(2..=100);
        let edges = random_edges(&mut rng, n, 2.5 / n as f64);
        let g = SimpleGraph::untyped(n, edges.clone()).unwrap();
        let dist = floyd(n, &edges);
        for phi in 1..=4 {
            cases += 1;
            let snap = neighbor_hyperedges(&g, phi).unwrap();
            for (v, e) in snap.hypergraph.edges().iter().enumerate() {
                let expected: Vec<usize> = (0..n).filter(|&u| dist[v][u] <= phi).collect();
                if e.members != expected {
                    problems.push(format!("neighbour set of node {v} (phi={phi}, trial {trial})"));
                }
            }
        }
        if !edges.is_empty() {
            let res = louvain(&g, trial).unwrap();
            if res.modularity_history.windows(2).any(|w| w[1] < w[0]) {
                problems.push(format!("modularity decreased across passes (trial {trial})"));
            }
            let q = newman_modularity(n, &edges, &res.membership);
            if (q - res.modularity()).abs() > 1e-10 {
                problems.push(format!("modularity {} vs recomputed {q} (trial {trial})", res.modularity()));
            }
        }
        let pts = Array2::from_shape_simple_fn((n, 3), || rng.random_range(-1.0..1.0));
        let k = rng.random_range(1..=n.min(8));
        let km = kmeans(pts.view(), k, trial).unwrap();
        if km.inertia_history.windows(2).any(|w| w[1] > w[0] + 1e-12) {
            problems.push(format!("k-means inertia increased (trial {trial})"));
        }
        let recomputed: f64 = (0..n)
            .map(|i| (&pts.row(i) - &km.centroids.row(km.assignments[i])).mapv(|d| d * d).sum())
            .sum();
        if (recomputed - km.inertia()).abs() > 1e-9 * recomputed.max(1.0) {
            problems.push(format!("k-means final inertia mismatch (trial {trial})"));
        }
    }
    let feats = FeatureMatrix::new(Array2::from_shape_simple_fn((40, 4), || rng.random_range(0.0..1.0))).unwrap();
    let snap = cluster_hyperedges(&feats, 4, 0).unwrap();
    let covered: usize = snap.hypergraph.edges().iter().map(|e| e.members.len()).sum();
    if covered != 40 {
        problems.push("cluster hyperedges do not partition the nodes".into());
    }
    Outcome::check(
        problems.is_empty(),
        if problems.is_empty() {
            format!("{cases} neighbour snapshots match shortest paths; Louvain and k-means monotone over 30 graphs")
        } else {
            problems.join("; ")
        },
    )
}

// ------------------------------------------------------------ Cora criteria

fn cora_dir() -> PathBuf {
    std::env::var_os("HWNN_CORA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/cora"))
}

fn cora() -> Result<Dataset, String> {
    let dir = cora_dir();
    if !dir.exists() {
        return Err(format!("Cora dataset not found at {}", dir.display()));
    }
    load_any(&dir).map_err(|e| format!("Cora dataset at {} failed to load: {e}", dir.display()))
}

fn not_evaluated(reason: &str) -> Outcome {
    Outcome {
        status: Status::NotEvaluated,
        detail: format!("not evaluated: {reason}"),
    }
}

const SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

fn end_to_end(d: &Dataset) -> Outcome {
    let t0 = Instant::now();
    let mut accs = Vec::new();
    for seed in SEEDS {
        let cfg = RunConfig {
            seed,
            label_ratio: 0.5,
            ..RunConfig::default()
        };
        match run(d, &cfg) {
            Ok(r) => accs.push(r.test_accuracy()),
            Err(e) => return Outcome::check(false, format!("seed {seed} failed: {e}")),
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    let med = median(accs.clone());
    Outcome::check(
        med >= 0.80 && secs < 15.0 * 60.0,
        format!("median test accuracy {med:.4} (need >= 0.80) over seeds {accs:.4?}, {secs:.0}s (limit 900s)"),
    )
}

fn k_trend(d: &Dataset) -> Outcome {
    let mut med = Vec::new();
    for k in 1..=3 {
        let mut accs = Vec::new();
        for seed in SEEDS {
            let mut cfg = RunConfig {
                seed,
                label_ratio: 0.3,
                ..RunConfig::default()
            };
            cfg.model.k_order = k;
            cfg.model.k_inv_order = k;
            match run(d, &cfg) {
                Ok(r) => accs.push(r.test_accuracy()),
                Err(e) => return Outcome::check(false, format!("K={k} seed {seed} failed: {e}")),
            }
        }
        med.push(median(accs));
    }
    let gain = med[1] - med[0];
    let drift = (med[2] - med[1]).abs();
    Outcome::check(
        gain >= 0.05 && drift <= 0.02,
        format!(
            "median accuracy K=1 {:.4}, K=2 {:.4}, K=3 {:.4}; K2-K1 {gain:+.4} (need >= 0.05), |K3-K2| {drift:.4} (need <= 0.02)",
            med[0], med[1], med[2]
        ),
    )
}

fn timing_exact(d: &Dataset) -> Outcome {
    let cfg = RunConfig {
        bench_epochs: 100,
        ..RunConfig::default()
    };
    match bench(d, &cfg) {
        Ok(b) => match b.speedup {
            Some(s) => Outcome::check(s >= 1.2, format!("polynomial path {s:.2}x faster than exact over 100 epochs (need >= 1.2)")),
            None => Outcome::check(false, "exact path not run: graph exceeds the eigendecomposition cap"),
        },
        Err(e) => Outcome::check(false, format!("bench failed: {e}")),
    }
}

fn timing_simplified(d: &Dataset, label: &str) -> Outcome {
    let mut cfg = RunConfig::default();
    cfg.train.epochs = 100;
    let snaps = match build_snapshots(d, &cfg.recipe, &cfg.hypergraph, cfg.seed) {
        Ok(s) => s,
        Err(e) => return Outcome::check(false, format!("construction failed: {e}")),
    };
    let time = |mode: Mode| {
        let mc = ModelConfig {
            mode,
            ..cfg.model.clone()
        };
        train_on(d, &snaps, &cfg, &mc).map(|r| r.timing.setup_seconds + r.timing.train_seconds)
    };
    // Simplified first, so any warm-up advantage goes to the full mode.
    match (time(Mode::Simplified), time(Mode::Full)) {
        (Ok(simple), Ok(full)) => Outcome::check(
            simple <= full,
            format!("{label}: simplified {simple:.1}s vs full {full:.1}s over 100 epochs (ratio {:.3})", simple / full),
        ),
        (Err(e), _) | (_, Err(e)) => Outcome::check(false, format!("{label}: run failed: {e}")),
    }
}

fn heterogeneity(d: &Dataset) -> Outcome {
    let mut combined = Vec::new();
    let mut single: Vec<Vec<f64>> = Vec::new();
    let mut tags = Vec::new();
    for seed in SEEDS {
        let cfg = RunConfig {
            seed,
            label_ratio: 0.1,
            ..RunConfig::default()
        };
        let snaps = match build_snapshots(d, &cfg.recipe, &cfg.hypergraph, seed) {
            Ok(s) => s,
            Err(e) => return Outcome::check(false, format!("construction failed: {e}")),
        };
        tags = snaps.iter().map(|s| s.type_tag.clone()).collect();
        single.resize(snaps.len(), Vec::new());
        match train_on(d, &snaps, &cfg, &cfg.model) {
            Ok(r) => combined.push(r.test_accuracy()),
            Err(e) => return Outcome::check(false, format!("combined run failed: {e}")),
        }
        for (i, s) in snaps.iter().enumerate() {
            match train_on(d, std::slice::from_ref(s), &cfg, &cfg.model) {
                Ok(r) => single[i].push(r.test_accuracy()),
                Err(e) => return Outcome::check(false, format!("single run `{}` failed: {e}", s.type_tag)),
            }
        }
    }
    let comb = median(combined.clone());
    let singles: Vec<f64> = single.into_iter().map(median).collect();
    let (best_i, best) = singles.iter().copied().enumerate().fold((0, f64::MIN), |a, (i, v)| if v > a.1 { (i, v) } else { a });
    let detail = format!(
        "combined median {comb:.4} vs best single `{}` {best:.4} (need >= best - 0.01)",
        tags.get(best_i).map_or("", String::as_str)
    );
    if comb >= best - 0.01 {
        return Outcome::check(true, detail);
    }
    let mean = combined.iter().sum::<f64>() / combined.len() as f64;
    let sd = (combined.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (combined.len() - 1) as f64).sqrt();
    let noise = 2.0 * sd / (combined.len() as f64).sqrt();
    if comb >= best - 0.01 - noise {
        Outcome {
            status: Status::FailUngated,
            detail: format!("{detail}; shortfall within seed noise {noise:.4}, reported not gated"),
        }
    } else {
        Outcome::check(false, detail)
    }
}

fn cora_sized_synthetic() -> Dataset {
    planted_dataset(
        &PlantedSpec {
            nodes: 2708,
            classes: 7,
            features: 1433,
            avg_degree: 3.9,
            ..PlantedSpec::default()
        },
        0,
    )
    .unwrap()
}

fn main() {
    // `cargo test -- --list` and filters come through here too.
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let strict = std::env::var("HWNN_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let data = cora();

    let mut results: Vec<(&str, &str, Outcome)> = Vec::new();
    let mut record = |id: &'static str, name: &'static str, f: &dyn Fn() -> Outcome| {
        let o = f();
        let tag = match o.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::FailUngated => "FAIL (not gated)",
            Status::NotEvaluated => "FAIL (not evaluated)",
        };
        println!("criterion {id:<3} {tag:<20} {name}: {}", o.detail);
        results.push((id, name, o));
    };

    record("1", "operator oracle equivalence", &operator_equivalence);
    record("2", "normalized adjacency identity", &theta_identity_property);
    record("3", "wavelet correctness", &wavelet_correctness);
    record("4", "degeneration to the baseline layer", &degeneration);
    record("5", "gradient checks", &gradient_checks);
    record("6", "end-to-end Cora accuracy", &|| match &data {
        Ok(d) => end_to_end(d),
        Err(e) => not_evaluated(e),
    });
    record("7", "K-sensitivity trend", &|| match &data {
        Ok(d) => k_trend(d),
        Err(e) => not_evaluated(e),
    });
    record("8a", "polynomial vs exact timing", &|| match &data {
        Ok(d) => timing_exact(d),
        Err(e) => not_evaluated(e),
    });
    record("8b", "simplified vs full timing", &|| match &data {
        Ok(d) => timing_simplified(d, "Cora"),
        Err(_) => timing_simplified(&cora_sized_synthetic(), "Cora-sized planted graph"),
    });
    record("9", "construction properties", &construction_properties);
    record("10", "heterogeneity ablation trend", &|| match &data {
        Ok(d) => heterogeneity(d),
        Err(e) => not_evaluated(e),
    });

    let gated: Vec<&str> = results
        .iter()
        .filter(|(_, _, o)| matches!(o.status, Status::Fail) || (strict && matches!(o.status, Status::NotEvaluated)))
        .map(|(id, _, _)| *id)
        .collect();
    let passed = results.iter().filter(|(_, _, o)| matches!(o.status, Status::Pass)).count();
    println!("acceptance: {passed} of {} criteria passed", results.len());
    if !gated.is_empty() {
        println!("acceptance: gated failures {gated:?}");
        std::process::exit(1);
    }
}
