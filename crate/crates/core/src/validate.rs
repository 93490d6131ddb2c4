//! Self-checks behind the `validate` command: sparse operators against dense
//! brute force, wavelet identities and the Taylor residual bound, the
//! degenerate layer, and analytic gradients against central differences.

use std::sync::Arc;

use ndarray::{Array1, Array2};
use ndarray_linalg::{EigValsh, UPLO};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::hypergraph::{
    laplacian, normalized_adjacency, theta, unnormalized_adjacency, Hypergraph, Snapshot, SparseOperator,
};
use crate::model::{baseline_hgnn_layer, layer_forward, Activation, Basis, LayerParams, Mode, Model, ModelConfig};
use crate::operator::DiffusionOperator;
use crate::sparse::CsrMatrix;
use crate::spectral::{eigendecompose, exact_wavelets, materialize_series, residual_bound, PolyWavelets};
use crate::synthetic::random_hypergraph;

pub const OPERATOR_TOL: f64 = 1e-10;
pub const IDENTITY_TOL: f64 = 1e-12;
pub const WAVELET_TOL: f64 = 1e-8;
pub const GRADIENT_TOL: f64 = 1e-5;
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidateOptions {
    pub seed: u64,
    /// Random hypergraphs for the operator checks.
    pub instances: usize,
    pub max_nodes: usize,
    pub max_edges: usize,
    /// Node count of the wavelet instances.
    pub wavelet_nodes: usize,
    pub scale: f64,
    /// Taylor orders checked against the residual bound.
    pub orders: Vec<usize>,
    /// Added to one entry of every sparse `Θ` before comparison. Zero in
    /// normal use; a non-zero value is a negative control.
    pub theta_fault: f64,
}

impl Default for ValidateOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            instances: 200,
            max_nodes: 50,
            max_edges: 20,
            wavelet_nodes: 40,
            scale: 1.0,
            orders: vec![1, 2, 3, 4],
            theta_fault: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub invariant: String,
    pub passed: bool,
    /// Worst observed value of the checked quantity.
    pub measured: f64,
    /// Value the quantity must not exceed.
    pub bound: f64,
    pub detail: String,
}

impl CheckOutcome {
    fn new(invariant: &str, measured: f64, bound: f64, detail: impl Into<String>) -> Self {
        Self {
            invariant: invariant.to_string(),
            // NaN must fail.
            passed: measured <= bound,
            measured,
            bound,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<CheckOutcome>,
    pub failures: Vec<String>,
}

impl ValidationReport {
    fn from_checks(checks: Vec<CheckOutcome>) -> Self {
        let failures: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.invariant.clone()).collect();
        Self {
            passed: failures.is_empty(),
            checks,
            failures,
        }
    }

    pub fn check(&self, invariant: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.invariant == invariant)
    }
}

pub fn run_validation(opts: &ValidateOptions) -> Result<ValidationReport> {
    let mut checks = operator_checks(opts);
    checks.extend(wavelet_checks(opts)?);
    checks.push(degeneration_check(opts.seed)?);
    checks.extend(gradient_checks(opts.seed)?);
    Ok(ValidationReport::from_checks(checks))
}

/// `D_v^{-1/2} H W D_e^{-1} Hᵀ D_v^{-1/2}` and `H W D_e^{-1} Hᵀ − D_v` by
/// dense matrix products, zero degrees inverted to zero.
pub fn dense_operators(h: &Hypergraph) -> (Array2<f64>, Array2<f64>) {
    let n = h.num_nodes();
    let m = h.num_edges();
    let mut inc = Array2::<f64>::zeros((n, m));
    for (j, e) in h.edges().iter().enumerate() {
        for &v in &e.members {
            inc[[v, j]] = 1.0;
        }
    }
    let w = Array2::from_diag(&Array1::from(h.weights().to_vec()));
    let de_inv = Array2::from_diag(&inc.sum_axis(ndarray::Axis(0)).mapv(|d| if d > 0.0 { 1.0 / d } else { 0.0 }));
    let dv = inc.dot(&w).sum_axis(ndarray::Axis(1));
    let dv_inv_sqrt = Array2::from_diag(&dv.mapv(|d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 }));
    let core = inc.dot(&w).dot(&de_inv).dot(&inc.t());
    let theta = dv_inv_sqrt.dot(&core).dot(&dv_inv_sqrt);
    let adj = &core - &Array2::from_diag(&dv);
    (theta, adj)
}

fn faulty_theta(h: &Hypergraph, fault: f64) -> SparseOperator {
    let mut t = theta(h);
    if fault != 0.0 && t.dim() > 0 {
        let bump = CsrMatrix::from_triplets(t.dim(), t.dim(), [(0, 0, fault)]);
        t.matrix = t.matrix.add_scaled(1.0, &bump, 1.0);
    }
    t
}

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn operator_checks(opts: &ValidateOptions) -> Vec<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (mut theta_err, mut lap_err, mut adj_err, mut norm_err, mut asym) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for _ in 0..opts.instances {
        let n = rng.random_range(1..=opts.max_nodes);
        let m = rng.random_range(1..=opts.max_edges);
        let h = random_hypergraph(&mut rng, n, m, n.min(8), 2.0, &["a", "b", "c"]);
        let (dense_theta, dense_adj) = dense_operators(&h);
        let t = faulty_theta(&h, opts.theta_fault);
        let id = Array2::<f64>::eye(n);
        theta_err = theta_err.max(max_abs_diff(&t.matrix.to_dense(), &dense_theta));
        lap_err = lap_err.max(max_abs_diff(&laplacian(&t).matrix.to_dense(), &(&id - &dense_theta)));
        adj_err = adj_err.max(max_abs_diff(&unnormalized_adjacency(&h).matrix.to_dense(), &dense_adj));
        let shifted = t.matrix.add_scaled(1.0, &CsrMatrix::identity(n), -1.0).to_dense();
        norm_err = norm_err.max(max_abs_diff(&shifted, &normalized_adjacency(&h).matrix.to_dense()));
        asym = asym.max(t.matrix.asymmetry());
    }
    let detail = format!("{} random hypergraphs", opts.instances);
    vec![
        CheckOutcome::new("theta-matches-dense", theta_err, OPERATOR_TOL, &detail),
        CheckOutcome::new("laplacian-matches-dense", lap_err, OPERATOR_TOL, &detail),
        CheckOutcome::new("unnormalized-adjacency-matches-dense", adj_err, OPERATOR_TOL, &detail),
        CheckOutcome::new("normalized-adjacency-is-theta-minus-identity", norm_err, IDENTITY_TOL, &detail),
        CheckOutcome::new("theta-symmetric", asym, 0.0, &detail),
    ]
}

fn sym_spectral_norm(a: &Array2<f64>) -> Result<f64> {
    let s = (a + &a.t()) * 0.5;
    let ev = s
        .eigvalsh(UPLO::Lower)
        .map_err(|e| crate::error::Error::Eigen(e.to_string()))?;
    Ok(ev.iter().fold(0.0f64, |m, v| m.max(v.abs())))
}

fn wavelet_checks(opts: &ValidateOptions) -> Result<Vec<CheckOutcome>> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x5A5A);
    let n = opts.wavelet_nodes.max(2);
    let h = random_hypergraph(&mut rng, n, n / 2, 6, 2.0, &["a"]);
    let t = faulty_theta(&h, opts.theta_fault);
    let delta = laplacian(&t);
    let es = eigendecompose(&delta, usize::MAX)?;
    let s = opts.scale;
    let ew = exact_wavelets(&es, s)?;
    let id = Array2::<f64>::eye(n);
    let inverse_err = max_abs_diff(&ew.psi.dot(&ew.psi_inv), &id);

    let mut psi_eigs = ew
        .psi
        .eigvalsh(UPLO::Lower)
        .map_err(|e| crate::error::Error::Eigen(e.to_string()))?
        .to_vec();
    psi_eigs.sort_by(f64::total_cmp);
    let mut expected: Vec<f64> = es.eigenvalues.iter().map(|l| (-l * s).exp()).collect();
    expected.sort_by(f64::total_cmp);
    let spectrum_err = psi_eigs.iter().zip(&expected).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));

    let lambda_max = es.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l));
    let lambda_min = es.eigenvalues.iter().fold(f64::INFINITY, |m, &l| m.min(l));
    let mut out = vec![
        CheckOutcome::new("wavelet-inverse-is-identity", inverse_err, WAVELET_TOL, format!("n={n}, s={s}")),
        CheckOutcome::new("wavelet-spectrum-is-heat-kernel", spectrum_err, WAVELET_TOL, format!("n={n}, s={s}")),
        CheckOutcome::new(
            "laplacian-spectrum-in-unit-interval",
            (-lambda_min).max(lambda_max - 1.0).max(0.0),
            OPERATOR_TOL,
            format!("eigenvalues in [{lambda_min:.3e}, {lambda_max:.6}]"),
        ),
    ];
    for &k in &opts.orders {
        let pw = PolyWavelets::taylor(Arc::new(DiffusionOperator::Assembled(t.clone())), s, k, k)?;
        let poly = materialize_series(&t.matrix, pw.theta_coeffs.as_slice().unwrap(), 0.0).to_dense();
        let measured = sym_spectral_norm(&(&poly - &ew.psi))?;
        let bound = residual_bound(lambda_max, s, k) + WAVELET_TOL;
        out.push(CheckOutcome::new(
            &format!("taylor-residual-bound-k{k}"),
            measured,
            bound,
            format!("spectral norm {measured:.3e} vs bound {bound:.3e} at lambda_max={lambda_max:.4}"),
        ));
    }
    Ok(out)
}

fn degeneration_check(seed: u64) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xDE6E);
    let n = 15;
    let h = random_hypergraph(&mut rng, n, 6, 4, 2.0, &["a"]);
    let t = theta(&h);
    let pw = PolyWavelets::new(Arc::new(DiffusionOperator::Assembled(t.clone())), vec![0.0, 1.0], vec![1.0], 1.0)?;
    let x = Array2::from_shape_simple_fn((n, 4), || rng.random_range(-1.0..1.0));
    let params = LayerParams {
        filter: Array1::ones(n),
        w: Array2::eye(4),
    };
    let wave = layer_forward(&params, &pw, x.view(), Activation::Relu)?;
    let base = baseline_hgnn_layer(&t, x.view(), params.w.view(), Activation::Relu)?;
    let mismatched = wave.iter().zip(&base).filter(|(a, b)| a.to_bits() != b.to_bits()).count();
    Ok(CheckOutcome::new(
        "degenerate-layer-equals-baseline-bitwise",
        mismatched as f64,
        0.0,
        format!("{mismatched} of {} entries differ in bits", wave.len()),
    ))
}

/// Central differences over every scalar of every parameter tensor. Returns
/// the relative error `‖g − ĝ‖ / max(‖g‖, ‖ĝ‖)` per tensor.
pub fn gradient_check(
    model: &Model,
    x: &CsrMatrix,
    targets: &[(usize, usize)],
    dropout_seed: Option<u64>,
    step: f64,
) -> Result<Vec<(String, f64)>> {
    let fwd = model.forward(x, dropout_seed)?;
    let analytic = model.backward(x, &fwd, targets);
    let mut probe = model.clone();
    let names = analytic.named();
    let mut out = Vec::with_capacity(names.len());
    for (i, (name, grad)) in names.iter().enumerate() {
        let mut numeric = Vec::with_capacity(grad.len());
        for j in 0..grad.len() {
            let orig = *probe.params.named()[i].1.iter().nth(j).unwrap();
            let mut eval = |v: f64| -> Result<f64> {
                *probe.params.named_mut()[i].1.iter_mut().nth(j).unwrap() = v;
                let f = probe.forward(x, dropout_seed)?;
                Ok(probe.loss(&f, targets))
            };
            let up = eval(orig + step)?;
            let down = eval(orig - step)?;
            eval(orig)?;
            numeric.push((up - down) / (2.0 * step));
        }
        let diff = grad.iter().zip(&numeric).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        let na = grad.iter().map(|a| a * a).sum::<f64>().sqrt();
        let nn = numeric.iter().map(|a| a * a).sum::<f64>().sqrt();
        let denom = na.max(nn);
        out.push((name.clone(), if denom < 1e-12 { diff } else { diff / denom }));
    }
    Ok(out)
}

/// Twelve nodes, two snapshots, five input features, three classes.
pub fn gradient_instance(seed: u64) -> (Vec<Snapshot>, CsrMatrix, Vec<(usize, usize)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 12;
    let snapshots = ["a", "b"]
        .iter()
        .map(|tag| {
            let h = random_hypergraph(&mut rng, n, 4, 4, 2.0, &[tag]);
            Snapshot::new(h, *tag).expect("single-typed")
        })
        .collect();
    let x = Array2::from_shape_simple_fn((n, 5), || rng.random_range(-1.0..1.0));
    let targets = (0..8).map(|v| (v, v % 3)).collect();
    (snapshots, CsrMatrix::from_dense(x.view()), targets)
}

fn gradient_checks(seed: u64) -> Result<Vec<CheckOutcome>> {
    let (snapshots, x, targets) = gradient_instance(seed);
    let base = ModelConfig {
        hidden: 6,
        head_hidden: 5,
        dropout: 0.3,
        eta: 0.01,
        ..ModelConfig::default()
    };
    let variants = [
        ("full", ModelConfig { mode: Mode::Full, ..base.clone() }),
        ("full-exact", ModelConfig { mode: Mode::Full, basis: Basis::Exact, ..base.clone() }),
        ("simplified", ModelConfig { mode: Mode::Simplified, ..base.clone() }),
        ("hgnn-baseline", ModelConfig { mode: Mode::HgnnBaseline, ..base }),
    ];
    let mut out = Vec::new();
    for (label, cfg) in variants {
        let model = Model::from_snapshots(cfg, &snapshots, 5, 3, seed)?;
        let errs = gradient_check(&model, &x, &targets, Some(seed.wrapping_add(1)), FD_STEP)?;
        let (worst_name, worst) = errs
            .iter()
            .fold(("", 0.0f64), |(wn, w), (n, e)| if *e > w || e.is_nan() { (n.as_str(), *e) } else { (wn, w) });
        out.push(CheckOutcome::new(
            &format!("gradient-check-{label}"),
            worst,
            GRADIENT_TOL,
            format!("{} tensors, worst `{worst_name}`", errs.len()),
        ));
    }
    Ok(out)
}
