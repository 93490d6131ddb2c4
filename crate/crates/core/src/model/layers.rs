use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::LinearOperator;
use crate::spectral::{apply_poly, apply_series, PolyWavelets};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Relu,
    Softmax,
    Identity,
}

impl Activation {
    pub fn apply(self, mut x: Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Relu => x.mapv_inplace(|v| v.max(0.0)),
            Activation::Softmax => softmax_rows_inplace(&mut x),
            Activation::Identity => {}
        }
        x
    }

    /// Gradient with respect to the pre-activation, given the activation
    /// output `out` and the gradient `d_out` with respect to it.
    pub(crate) fn backward(self, out: &Array2<f64>, mut d_out: Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Relu => {
                Zip::from(&mut d_out).and(out).for_each(|d, &o| {
                    if o <= 0.0 {
                        *d = 0.0;
                    }
                });
                d_out
            }
            Activation::Softmax => {
                for (mut d, s) in d_out.rows_mut().into_iter().zip(out.rows()) {
                    let dot = d.dot(&s);
                    Zip::from(&mut d).and(&s).for_each(|d, &s| *d = s * (*d - dot));
                }
                d_out
            }
            Activation::Identity => d_out,
        }
    }
}

/// Row-wise softmax, shifted by the row maximum.
pub fn softmax_rows_inplace(x: &mut Array2<f64>) {
    for mut row in x.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
}

/// Per-node layer parameters: diagonal filter and feature projection.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub filter: Array1<f64>,
    pub w: Array2<f64>,
}

/// Row `i` of the result is `m · x_i`.
pub fn project(x: ArrayView2<'_, f64>, m: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    if m.nrows() != m.ncols() || m.ncols() != x.ncols() {
        return Err(Error::Shape(format!(
            "projection {}×{} against {} feature columns",
            m.nrows(),
            m.ncols(),
            x.ncols()
        )));
    }
    Ok(x.dot(&m.t()))
}

fn check_chain(x: ArrayView2<'_, f64>, w: ArrayView2<'_, f64>, n: usize) -> Result<()> {
    if x.nrows() != n || x.ncols() != w.nrows() {
        return Err(Error::Shape(format!(
            "signal {}×{}, weight {}×{}, operator of size {n}",
            x.nrows(),
            x.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    Ok(())
}

/// `h(Θ_Σ · diag(filter) · Θ_Σ′ · x · w)`.
pub fn layer_forward(
    params: &LayerParams,
    pw: &PolyWavelets,
    x: ArrayView2<'_, f64>,
    activation: Activation,
) -> Result<Array2<f64>> {
    let n = pw.base.dim();
    check_chain(x, params.w.view(), n)?;
    if params.filter.len() != n {
        return Err(Error::Shape(format!("filter length {} for {n} nodes", params.filter.len())));
    }
    let a = x.dot(&params.w);
    let b = apply_poly(pw, a.view(), true)?;
    let c = scale_rows(b, params.filter.view());
    Ok(activation.apply(apply_poly(pw, c.view(), false)?))
}

/// `h((Σ_{k=0}^{K} Θ^k x) w)`.
pub fn simplified_layer_forward(
    theta: &dyn LinearOperator,
    k_order: usize,
    x: ArrayView2<'_, f64>,
    w: ArrayView2<'_, f64>,
    activation: Activation,
) -> Result<Array2<f64>> {
    check_chain(x, w, theta.dim())?;
    let ones = Array1::ones(k_order + 1);
    Ok(activation.apply(apply_series(theta, ones.view(), x).dot(&w)))
}

/// `h(Θ x w)`, with `x w` formed first.
pub fn baseline_hgnn_layer(
    theta: &dyn LinearOperator,
    x: ArrayView2<'_, f64>,
    w: ArrayView2<'_, f64>,
    activation: Activation,
) -> Result<Array2<f64>> {
    check_chain(x, w, theta.dim())?;
    Ok(activation.apply(theta.apply(x.dot(&w).view())))
}

pub(crate) fn scale_rows(mut x: Array2<f64>, s: ArrayView1<'_, f64>) -> Array2<f64> {
    x *= &s.insert_axis(Axis(1));
    x
}

/// `[x, Θx, …, Θ^k x]`.
pub(crate) fn krylov(op: &dyn LinearOperator, x: Array2<f64>, k: usize) -> Vec<Array2<f64>> {
    let mut out = Vec::with_capacity(k + 1);
    out.push(x);
    for _ in 0..k {
        let next = op.apply(out.last().unwrap().view());
        out.push(next);
    }
    out
}

/// `Σ_k c_k t_k`.
pub(crate) fn combine(coeffs: ArrayView1<'_, f64>, terms: &[Array2<f64>]) -> Array2<f64> {
    let mut acc = &terms[0] * coeffs[0];
    for (c, t) in coeffs.iter().zip(terms).skip(1) {
        acc.scaled_add(*c, t);
    }
    acc
}

/// `⟨t_k, g⟩` for every term.
pub(crate) fn term_inner(terms: &[Array2<f64>], g: &Array2<f64>) -> Array1<f64> {
    terms.iter().map(|t| (t * g).sum()).collect()
}
