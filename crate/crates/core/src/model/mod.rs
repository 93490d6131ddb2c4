//! The wavelet network: per-snapshot projection and convolution stacks, a
//! perceptron head over their concatenation, the training loss and its
//! hand-written gradient.
//!
//! Per snapshot `t` with projection `M_t`, the first layer computes
//! `h(Θ_Σ diag(f) Θ_Σ′ (X M_tᵀ) W)`. The projection is folded into the first
//! feature transform as `X (M_tᵀ W)`, so the sparse feature matrix is only
//! ever multiplied by a thin dense matrix.

mod checkpoint;
mod layers;
mod metrics;
mod optim;
mod params;
mod train;

use std::sync::Arc;

use ndarray::{concatenate, s, Array1, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::{laplacian, theta as theta_matrix, Snapshot};
use crate::operator::{DiffusionOperator, LinearOperator};
use crate::sparse::CsrMatrix;
use crate::spectral::{
    apply_series, eigendecompose, exact_wavelets, laplacian_series_to_theta_basis, taylor_coefficients,
    ExactWavelets, DEFAULT_EIGEN_CAP,
};

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointHeader};
pub use layers::{
    baseline_hgnn_layer, layer_forward, project, simplified_layer_forward, softmax_rows_inplace, Activation,
    LayerParams,
};
pub use metrics::{argmax_rows, classification_metrics, evaluate, Metrics};
pub use optim::{Adam, AdamConfig};
pub use params::{is_weight, HeadParams, Params, SnapshotParams};
pub use train::{train, EpochRecord, History, LabeledSplit, TrainConfig};

use layers::{combine, krylov, scale_rows, term_inner};

/// Lower clamp on probabilities inside the logarithm of the loss.
pub const LOG_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Wavelet layer `h(Θ_Σ diag(f) Θ_Σ′ X W)`.
    Full,
    /// `h(Σ_{k≤K} Θ^k X W)`.
    Simplified,
    /// `h(Θ X W)`.
    HgnnBaseline,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Mode::Full),
            "simplified" => Ok(Mode::Simplified),
            "hgnn-baseline" => Ok(Mode::HgnnBaseline),
            _ => Err(Error::Config(format!("unknown mode `{s}` (full, simplified, hgnn-baseline)"))),
        }
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Full => "full",
            Mode::Simplified => "simplified",
            Mode::HgnnBaseline => "hgnn-baseline",
        })
    }
}

/// How the full mode realises the wavelet pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Basis {
    Polynomial,
    /// Dense `ψ_s`, `ψ_s^{-1}` from an eigendecomposition; subject to the eigen cap.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regularizer {
    /// `η Σ_t tr(M_tᵀ M_t)`.
    Trace,
    /// `η Σ ‖W‖²` over every weight matrix.
    L2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub mode: Mode,
    pub basis: Basis,
    pub k_order: usize,
    pub k_inv_order: usize,
    pub scale: f64,
    pub layers: usize,
    pub hidden: usize,
    /// Width of each snapshot branch; the class count when unset.
    pub out_dim: Option<usize>,
    pub head_hidden: usize,
    /// Applied after the first layer only.
    pub dropout: f64,
    pub eta: f64,
    pub regularizer: Regularizer,
    /// Learn the polynomial coefficients instead of keeping the Taylor values.
    pub train_poly: bool,
    pub output_activation: Activation,
    pub eigen_cap: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Full,
            basis: Basis::Polynomial,
            k_order: 2,
            k_inv_order: 2,
            scale: 1.0,
            layers: 2,
            hidden: 64,
            out_dim: None,
            head_hidden: 64,
            dropout: 0.5,
            eta: 1e-4,
            regularizer: Regularizer::Trace,
            train_poly: true,
            output_activation: Activation::Softmax,
            eigen_cap: DEFAULT_EIGEN_CAP,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(0.0..1.0).contains(&self.dropout) {
            return bad(format!("dropout must lie in [0, 1), got {}", self.dropout));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return bad(format!("regularization weight must be non-negative, got {}", self.eta));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return bad(format!("wavelet scale must be positive, got {}", self.scale));
        }
        if self.layers == 0 || self.hidden == 0 || self.head_hidden == 0 || self.out_dim == Some(0) {
            return bad("layer count and widths must be at least 1".into());
        }
        Ok(())
    }

    fn uses_poly_coeffs(&self) -> bool {
        self.mode == Mode::Full && self.basis == Basis::Polynomial
    }
}

/// Operators derived from one snapshot.
#[derive(Debug, Clone)]
pub struct SnapshotOperator {
    pub tag: String,
    pub theta: Arc<DiffusionOperator>,
    pub exact: Option<Arc<ExactWavelets>>,
}

impl SnapshotOperator {
    pub fn new(snapshot: &Snapshot, config: &ModelConfig) -> Result<Self> {
        let h = &snapshot.hypergraph;
        let exact = if config.mode == Mode::Full && config.basis == Basis::Exact {
            let es = eigendecompose(&laplacian(&theta_matrix(h)), config.eigen_cap)?;
            Some(Arc::new(exact_wavelets(&es, config.scale)?))
        } else {
            None
        };
        Ok(Self {
            tag: snapshot.type_tag.clone(),
            theta: Arc::new(DiffusionOperator::build(h)),
            exact,
        })
    }

    /// Operators for several snapshots, built in parallel.
    pub fn build_all(snapshots: &[Snapshot], config: &ModelConfig) -> Result<Vec<Self>> {
        snapshots.par_iter().map(|s| Self::new(s, config)).collect()
    }
}

enum Propagation {
    Poly {
        ka: Vec<Array2<f64>>,
        kc: Vec<Array2<f64>>,
        b: Array2<f64>,
    },
    Exact {
        b: Array2<f64>,
    },
    Plain,
}

struct LayerCache {
    /// Layer input for every layer but the first, whose input is the feature matrix.
    input: Option<Array2<f64>>,
    prop: Propagation,
    out: Array2<f64>,
    /// Scaled keep-mask applied to `out` before the next layer.
    mask: Option<Array2<f64>>,
}

struct BranchCache {
    layers: Vec<LayerCache>,
}

/// Activations retained by [`Model::forward`] for the backward pass.
pub struct Forward {
    branches: Vec<BranchCache>,
    /// Concatenated branch outputs, before the head.
    pub z: Array2<f64>,
    pre_hidden: Array2<f64>,
    hidden: Array2<f64>,
    pub probs: Array2<f64>,
}

impl Forward {
    /// Output of branch `t` (a column block of `z`).
    pub fn branch_output(&self, t: usize) -> &Array2<f64> {
        &self.branches[t].layers.last().unwrap().out
    }
}

#[derive(Debug, Clone)]
pub struct Model {
    pub config: ModelConfig,
    pub params: Params,
    operators: Vec<SnapshotOperator>,
    num_nodes: usize,
    in_dim: usize,
    num_classes: usize,
}

impl Model {
    pub fn new(
        config: ModelConfig,
        operators: Vec<SnapshotOperator>,
        in_dim: usize,
        num_classes: usize,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        if operators.is_empty() {
            return Err(Error::Config("model needs at least one snapshot".into()));
        }
        if in_dim == 0 || num_classes == 0 {
            return Err(Error::Config("feature and class counts must be positive".into()));
        }
        let n = operators[0].theta.dim();
        if operators.iter().any(|o| o.theta.dim() != n) {
            return Err(Error::Shape("snapshots disagree on the node count".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let out_dim = config.out_dim.unwrap_or(num_classes);
        let mut widths = vec![in_dim];
        widths.extend(std::iter::repeat_n(config.hidden, config.layers - 1));
        widths.push(out_dim);
        let full = config.mode == Mode::Full;
        let snapshots = operators
            .iter()
            .map(|op| {
                let proj = params::near_identity(&mut rng, in_dim);
                let layers = widths
                    .windows(2)
                    .map(|w| LayerParams {
                        filter: if full { Array1::ones(n) } else { Array1::zeros(0) },
                        w: params::glorot(&mut rng, w[0], w[1]),
                    })
                    .collect();
                let (theta, theta_inv) = if config.uses_poly_coeffs() {
                    let t = laplacian_series_to_theta_basis(&taylor_coefficients(config.scale, config.k_order, -1.0));
                    let ti =
                        laplacian_series_to_theta_basis(&taylor_coefficients(config.scale, config.k_inv_order, 1.0));
                    (Some(Array1::from(t)), Some(Array1::from(ti)))
                } else {
                    (None, None)
                };
                SnapshotParams {
                    tag: op.tag.clone(),
                    proj,
                    layers,
                    theta,
                    theta_inv,
                }
            })
            .collect::<Vec<_>>();
        let concat = operators.len() * out_dim;
        let head = HeadParams {
            w1: params::glorot(&mut rng, concat, config.head_hidden),
            b1: Array1::zeros(config.head_hidden),
            w2: params::glorot(&mut rng, config.head_hidden, num_classes),
            b2: Array1::zeros(num_classes),
        };
        Ok(Self {
            config,
            params: Params { snapshots, head },
            operators,
            num_nodes: n,
            in_dim,
            num_classes,
        })
    }

    pub fn from_snapshots(
        config: ModelConfig,
        snapshots: &[Snapshot],
        in_dim: usize,
        num_classes: usize,
        seed: u64,
    ) -> Result<Self> {
        config.validate()?;
        let ops = SnapshotOperator::build_all(snapshots, &config)?;
        Self::new(config, ops, in_dim, num_classes, seed)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn operators(&self) -> &[SnapshotOperator] {
        &self.operators
    }

    pub fn tags(&self) -> Vec<String> {
        self.operators.iter().map(|o| o.tag.clone()).collect()
    }

    fn layer_activation(&self, layer: usize) -> Activation {
        if layer + 1 == self.config.layers {
            self.config.output_activation
        } else {
            Activation::Relu
        }
    }

    fn propagate(&self, t: usize, layer: usize, a: Array2<f64>) -> (Array2<f64>, Propagation) {
        let op = &self.operators[t];
        let sp = &self.params.snapshots[t];
        let theta: &dyn LinearOperator = op.theta.as_ref();
        match self.config.mode {
            Mode::Full => {
                let filter = sp.layers[layer].filter.view();
                if let Some(ex) = &op.exact {
                    let b = ex.psi_inv.dot(&a);
                    let c = scale_rows(b.clone(), filter);
                    (ex.psi.dot(&c), Propagation::Exact { b })
                } else {
                    let th = sp.theta.as_ref().expect("polynomial coefficients");
                    let thi = sp.theta_inv.as_ref().expect("polynomial coefficients");
                    let ka = krylov(theta, a, thi.len() - 1);
                    let b = combine(thi.view(), &ka);
                    let c = scale_rows(b.clone(), filter);
                    let kc = krylov(theta, c, th.len() - 1);
                    let d = combine(th.view(), &kc);
                    (d, Propagation::Poly { ka, kc, b })
                }
            }
            Mode::Simplified => {
                let ones = Array1::ones(self.config.k_order + 1);
                (apply_series(theta, ones.view(), a.view()), Propagation::Plain)
            }
            Mode::HgnnBaseline => (theta.apply(a.view()), Propagation::Plain),
        }
    }

    /// Pulls the gradient of a propagation output back to its input,
    /// accumulating filter and coefficient gradients into `g`.
    fn propagate_back(
        &self,
        t: usize,
        layer: usize,
        prop: &Propagation,
        dd: Array2<f64>,
        g: &mut SnapshotParams,
    ) -> Array2<f64> {
        let op = &self.operators[t];
        let sp = &self.params.snapshots[t];
        let theta: &dyn LinearOperator = op.theta.as_ref();
        match (self.config.mode, prop) {
            (Mode::Full, Propagation::Poly { ka, kc, b }) => {
                let th = sp.theta.as_ref().unwrap();
                let thi = sp.theta_inv.as_ref().unwrap();
                *g.theta.as_mut().unwrap() += &term_inner(kc, &dd);
                let dc = apply_series(theta, th.view(), dd.view());
                g.layers[layer].filter += &(b * &dc).sum_axis(Axis(1));
                let db = scale_rows(dc, sp.layers[layer].filter.view());
                *g.theta_inv.as_mut().unwrap() += &term_inner(ka, &db);
                apply_series(theta, thi.view(), db.view())
            }
            (Mode::Full, Propagation::Exact { b }) => {
                let ex = op.exact.as_ref().unwrap();
                let dc = ex.psi.t().dot(&dd);
                g.layers[layer].filter += &(b * &dc).sum_axis(Axis(1));
                let db = scale_rows(dc, sp.layers[layer].filter.view());
                ex.psi_inv.t().dot(&db)
            }
            (Mode::Simplified, _) => {
                let ones = Array1::ones(self.config.k_order + 1);
                apply_series(theta, ones.view(), dd.view())
            }
            (Mode::HgnnBaseline, _) => theta.apply(dd.view()),
            _ => unreachable!("propagation cache does not match the mode"),
        }
    }

    fn branch_forward(&self, t: usize, x: &CsrMatrix, dropout_seed: Option<u64>) -> BranchCache {
        let sp = &self.params.snapshots[t];
        // M_tᵀ W_1
        let fused = sp.proj.t().dot(&sp.layers[0].w);
        let mut caches = Vec::with_capacity(self.config.layers);
        let mut input: Option<Array2<f64>> = None;
        for layer in 0..self.config.layers {
            let a = match &input {
                None => x.mul_dense(fused.view()),
                Some(inp) => inp.dot(&sp.layers[layer].w),
            };
            let (d, prop) = self.propagate(t, layer, a);
            let out = self.layer_activation(layer).apply(d);
            let mask = match dropout_seed {
                Some(seed) if layer == 0 && self.config.layers > 1 && self.config.dropout > 0.0 => {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    rng.set_stream(t as u64);
                    let keep = 1.0 - self.config.dropout;
                    Some(Array2::from_shape_simple_fn(out.raw_dim(), || {
                        if rng.random::<f64>() < keep {
                            1.0 / keep
                        } else {
                            0.0
                        }
                    }))
                }
                _ => None,
            };
            let next = match &mask {
                Some(m) => &out * m,
                None => out.clone(),
            };
            caches.push(LayerCache {
                input: input.take(),
                prop,
                out,
                mask,
            });
            input = Some(next);
        }
        BranchCache { layers: caches }
    }

    fn check_features(&self, x: &CsrMatrix) -> Result<()> {
        if x.nrows() != self.num_nodes || x.ncols() != self.in_dim {
            return Err(Error::Shape(format!(
                "features are {}×{}, model expects {}×{}",
                x.nrows(),
                x.ncols(),
                self.num_nodes,
                self.in_dim
            )));
        }
        Ok(())
    }

    /// Full forward pass. Dropout is active only when `dropout_seed` is given;
    /// the mask is a deterministic function of the seed and branch index.
    pub fn forward(&self, x: &CsrMatrix, dropout_seed: Option<u64>) -> Result<Forward> {
        self.check_features(x)?;
        let branches: Vec<BranchCache> = (0..self.operators.len())
            .into_par_iter()
            .map(|t| self.branch_forward(t, x, dropout_seed))
            .collect();
        let outs: Vec<_> = branches.iter().map(|b| b.layers.last().unwrap().out.view()).collect();
        let z = concatenate(Axis(1), &outs).expect("branch outputs share the row count");
        let head = &self.params.head;
        let pre_hidden = z.dot(&head.w1) + &head.b1;
        let hidden = pre_hidden.mapv(|v| v.max(0.0));
        let mut probs = hidden.dot(&head.w2) + &head.b2;
        softmax_rows_inplace(&mut probs);
        Ok(Forward {
            branches,
            z,
            pre_hidden,
            hidden,
            probs,
        })
    }

    /// Class probabilities without dropout.
    pub fn predict(&self, x: &CsrMatrix) -> Result<Array2<f64>> {
        Ok(self.forward(x, None)?.probs)
    }

    pub fn regularization(&self) -> f64 {
        let eta = self.config.eta;
        match self.config.regularizer {
            Regularizer::Trace => eta * self.params.snapshots.iter().map(|s| s.proj.iter().map(|v| v * v).sum::<f64>()).sum::<f64>(),
            Regularizer::L2 => {
                eta * self
                    .params
                    .named()
                    .iter()
                    .filter(|(n, _)| is_weight(n))
                    .map(|(_, t)| t.iter().map(|v| v * v).sum::<f64>())
                    .sum::<f64>()
            }
        }
    }

    /// Cross-entropy over `targets` (node, class) plus the regularizer.
    pub fn loss(&self, fwd: &Forward, targets: &[(usize, usize)]) -> f64 {
        cross_entropy(&fwd.probs, targets) + self.regularization()
    }

    /// Gradient of [`Model::loss`] for every parameter tensor.
    pub fn backward(&self, x: &CsrMatrix, fwd: &Forward, targets: &[(usize, usize)]) -> Params {
        let mut grads = self.params.zeros_like();
        let head = &self.params.head;
        let mut dlogits = Array2::<f64>::zeros(fwd.probs.raw_dim());
        for &(v, c) in targets {
            if fwd.probs[[v, c]] >= LOG_CLAMP {
                let mut row = dlogits.row_mut(v);
                row += &fwd.probs.row(v);
                row[c] -= 1.0;
            }
        }
        grads.head.w2 = fwd.hidden.t().dot(&dlogits);
        grads.head.b2 = dlogits.sum_axis(Axis(0));
        let mut dpre = dlogits.dot(&head.w2.t());
        ndarray::Zip::from(&mut dpre).and(&fwd.pre_hidden).for_each(|d, &p| {
            if p <= 0.0 {
                *d = 0.0;
            }
        });
        grads.head.w1 = fwd.z.t().dot(&dpre);
        grads.head.b1 = dpre.sum_axis(Axis(0));
        let dz = dpre.dot(&head.w1.t());
        let width = dz.ncols() / self.operators.len();
        let branch_grads: Vec<SnapshotParams> = grads
            .snapshots
            .into_par_iter()
            .enumerate()
            .map(|(t, mut g)| {
                let d_out = dz.slice(s![.., t * width..(t + 1) * width]).to_owned();
                self.branch_backward(t, x, &fwd.branches[t], d_out, &mut g);
                g
            })
            .collect();
        grads.snapshots = branch_grads;
        self.add_regularization_grad(&mut grads);
        grads
    }

    fn branch_backward(&self, t: usize, x: &CsrMatrix, cache: &BranchCache, mut d_out: Array2<f64>, g: &mut SnapshotParams) {
        let sp = &self.params.snapshots[t];
        for layer in (0..self.config.layers).rev() {
            let lc = &cache.layers[layer];
            let dd = self.layer_activation(layer).backward(&lc.out, d_out);
            let da = self.propagate_back(t, layer, &lc.prop, dd, g);
            match &lc.input {
                Some(inp) => {
                    g.layers[layer].w = inp.t().dot(&da);
                    let d_in = da.dot(&sp.layers[layer].w.t());
                    d_out = match &cache.layers[layer - 1].mask {
                        Some(m) => d_in * m,
                        None => d_in,
                    };
                }
                None => {
                    let dq = x.transpose_mul_dense(da.view());
                    g.proj = sp.layers[0].w.dot(&dq.t());
                    g.layers[0].w = sp.proj.dot(&dq);
                    return;
                }
            }
        }
    }

    fn add_regularization_grad(&self, grads: &mut Params) {
        let two_eta = 2.0 * self.config.eta;
        if two_eta == 0.0 {
            return;
        }
        match self.config.regularizer {
            Regularizer::Trace => {
                for (g, p) in grads.snapshots.iter_mut().zip(&self.params.snapshots) {
                    g.proj.scaled_add(two_eta, &p.proj);
                }
            }
            Regularizer::L2 => {
                let params = self.params.named();
                for ((name, mut g), (_, p)) in grads.named_mut().into_iter().zip(params) {
                    if is_weight(&name) {
                        g.scaled_add(two_eta, &p);
                    }
                }
            }
        }
    }

    /// Replaces parameters, checking that the structure matches.
    pub fn set_params(&mut self, params: Params) -> Result<()> {
        if params.shapes() != self.params.shapes() {
            return Err(Error::Shape("parameter structure does not match the model".into()));
        }
        self.params = params;
        Ok(())
    }
}

/// `−Σ ln max(p_{v,c}, 1e−12)` over the given (node, class) pairs.
pub fn cross_entropy(probs: &Array2<f64>, targets: &[(usize, usize)]) -> f64 {
    -targets.iter().map(|&(v, c)| probs[[v, c]].max(LOG_CLAMP).ln()).sum::<f64>()
}
