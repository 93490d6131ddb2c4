//! Heat-kernel wavelets on a hypergraph Laplacian.
//!
//! The exact route diagonalises `Δ = U Λ Uᵀ` and forms `ψ_s = U e^{−sΛ} Uᵀ`
//! together with its inverse `ψ_{−s}`. The production route replaces both by
//! polynomials in `Θ` whose coefficients start from the truncated Taylor
//! series of `e^{∓sλ}`, so nothing beyond sparse products is ever needed.

use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use ndarray_linalg::{Eigh, UPLO};

use crate::error::{Error, Result};
use crate::hypergraph::SparseOperator;
use crate::operator::{DiffusionOperator, LinearOperator};
use crate::sparse::CsrMatrix;

/// Largest operator the dense eigensolver accepts by default.
pub const DEFAULT_EIGEN_CAP: usize = 3000;
pub const DEFAULT_SCALE: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct EigenSystem {
    /// Ascending eigenvalues.
    pub eigenvalues: Array1<f64>,
    /// Orthonormal eigenvectors as columns.
    pub eigenvectors: Array2<f64>,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U diag(f) Uᵀ`, symmetrised.
    pub fn spectral_matrix(&self, f: impl Fn(f64) -> f64) -> Array2<f64> {
        let u = &self.eigenvectors;
        let scaled = u * &self.eigenvalues.mapv(f).insert_axis(Axis(0));
        let m = scaled.dot(&u.t());
        (&m + &m.t()) * 0.5
    }
}

/// Dense symmetric eigendecomposition of `delta`. Refuses operators larger than `cap`.
pub fn eigendecompose(delta: &SparseOperator, cap: usize) -> Result<EigenSystem> {
    let n = delta.dim();
    if n > cap {
        return Err(Error::TooLargeForEigen { size: n, cap });
    }
    if n == 0 {
        return Ok(EigenSystem {
            eigenvalues: Array1::zeros(0),
            eigenvectors: Array2::zeros((0, 0)),
        });
    }
    let dense = delta.matrix.to_dense();
    let (values, vectors) = dense.eigh(UPLO::Lower).map_err(|e| Error::Eigen(e.to_string()))?;
    Ok(EigenSystem {
        eigenvalues: values,
        eigenvectors: vectors,
    })
}

#[derive(Debug, Clone)]
pub struct ExactWavelets {
    pub psi: Array2<f64>,
    pub psi_inv: Array2<f64>,
    pub scale: f64,
}

/// `ψ_s = U e^{−sΛ} Uᵀ` and `ψ_s^{-1} = U e^{+sΛ} Uᵀ`.
pub fn exact_wavelets(es: &EigenSystem, s: f64) -> Result<ExactWavelets> {
    if !(s > 0.0) {
        return Err(Error::Config(format!("wavelet scale must be positive, got {s}")));
    }
    Ok(ExactWavelets {
        psi: es.spectral_matrix(|l| (-l * s).exp()),
        psi_inv: es.spectral_matrix(|l| (l * s).exp()),
        scale: s,
    })
}

/// Taylor coefficients `α_k = (sign·s)^k / k!` of `e^{sign·s·λ}`, `k = 0..=K`.
pub fn taylor_coefficients(s: f64, k_order: usize, sign: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(k_order + 1);
    let mut term = 1.0;
    out.push(term);
    for k in 1..=k_order {
        term *= sign * s / k as f64;
        out.push(term);
    }
    out
}

/// Upper bound `(λs)^{K+1} / (K+1)!` on the Taylor residual of `e^{−λs}`.
pub fn residual_bound(lambda: f64, s: f64, k_order: usize) -> f64 {
    let x = lambda * s;
    (1..=k_order + 1).fold(1.0, |acc, j| acc * x / j as f64)
}

/// Rewrites `Σ_k α_k Δ^k` with `Δ = I − Θ` as `Σ_j θ_j Θ^j`.
pub fn laplacian_series_to_theta_basis(alpha: &[f64]) -> Vec<f64> {
    let k = alpha.len();
    let mut theta = vec![0.0; k];
    // Binomial row of (I − Θ)^m, updated in place.
    let mut binom = vec![0.0; k];
    for (m, &a) in alpha.iter().enumerate() {
        for j in (1..=m).rev() {
            binom[j] += binom[j - 1];
        }
        binom[0] = 1.0;
        for j in 0..=m {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            theta[j] += a * sign * binom[j];
        }
    }
    theta
}

/// Polynomial wavelet pair `Θ_Σ = Σ θ_k Θ^k`, `Θ_Σ′ = Σ θ′_k Θ^k`.
#[derive(Debug, Clone)]
pub struct PolyWavelets {
    pub theta_coeffs: Array1<f64>,
    pub theta_inv_coeffs: Array1<f64>,
    pub base: Arc<DiffusionOperator>,
    pub scale: f64,
}

impl PolyWavelets {
    pub fn new(base: Arc<DiffusionOperator>, theta: Vec<f64>, theta_inv: Vec<f64>, scale: f64) -> Result<Self> {
        if theta.is_empty() || theta_inv.is_empty() {
            return Err(Error::Config("polynomial wavelets need at least one coefficient".into()));
        }
        if theta.iter().chain(&theta_inv).any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("wavelet coefficients".into()));
        }
        Ok(Self {
            theta_coeffs: Array1::from(theta),
            theta_inv_coeffs: Array1::from(theta_inv),
            base,
            scale,
        })
    }

    /// Coefficients of the truncated heat-kernel series in `Δ`, rewritten in powers of `Θ`.
    pub fn taylor(base: Arc<DiffusionOperator>, s: f64, k_order: usize, k_inv_order: usize) -> Result<Self> {
        let theta = laplacian_series_to_theta_basis(&taylor_coefficients(s, k_order, -1.0));
        let theta_inv = laplacian_series_to_theta_basis(&taylor_coefficients(s, k_inv_order, 1.0));
        Self::new(base, theta, theta_inv, s)
    }

    pub fn k_order(&self) -> usize {
        self.theta_coeffs.len() - 1
    }

    pub fn k_inv_order(&self) -> usize {
        self.theta_inv_coeffs.len() - 1
    }
}

/// Horner evaluation of `(Σ_k c_k Θ^k) x`.
pub fn apply_series(op: &dyn LinearOperator, coeffs: ArrayView1<'_, f64>, x: ArrayView2<'_, f64>) -> Array2<f64> {
    let k = coeffs.len();
    assert!(k > 0, "empty polynomial");
    let mut acc = x.to_owned() * coeffs[k - 1];
    for c in coeffs.iter().rev().skip(1) {
        let mut next = op.apply(acc.view());
        next.scaled_add(*c, &x);
        acc = next;
    }
    acc
}

/// `Θ_Σ x`, or `Θ_Σ′ x` when `inverse` is set.
pub fn apply_poly(pw: &PolyWavelets, x: ArrayView2<'_, f64>, inverse: bool) -> Result<Array2<f64>> {
    if x.nrows() != pw.base.dim() {
        return Err(Error::Shape(format!(
            "signal has {} rows, operator is {}×{}",
            x.nrows(),
            pw.base.dim(),
            pw.base.dim()
        )));
    }
    let coeffs = if inverse { &pw.theta_inv_coeffs } else { &pw.theta_coeffs };
    Ok(apply_series(pw.base.as_ref(), coeffs.view(), x))
}

/// `U diag(filter) Uᵀ x`.
pub fn fourier_convolve(es: &EigenSystem, x: ArrayView2<'_, f64>, filter_diag: ArrayView1<'_, f64>) -> Result<Array2<f64>> {
    if x.nrows() != es.dim() || filter_diag.len() != es.dim() {
        return Err(Error::Shape(format!(
            "basis of size {}, signal rows {}, filter length {}",
            es.dim(),
            x.nrows(),
            filter_diag.len()
        )));
    }
    let u = &es.eigenvectors;
    let spectrum = u.t().dot(&x) * &filter_diag.insert_axis(Axis(1));
    Ok(u.dot(&spectrum))
}

/// Assembles `Σ_k c_k Θ^k` as a sparse matrix, dropping entries with
/// `|v| <= threshold` after every Horner step.
pub fn materialize_series(theta: &CsrMatrix, coeffs: &[f64], threshold: f64) -> CsrMatrix {
    let n = theta.nrows();
    let id = CsrMatrix::identity(n);
    let k = coeffs.len();
    let mut acc = id.add_scaled(coeffs[k - 1], &CsrMatrix::zeros(n, n), 0.0);
    for &c in coeffs.iter().rev().skip(1) {
        acc = theta.matmul(&acc).add_scaled(1.0, &id, c);
        acc.prune(threshold);
    }
    acc
}
