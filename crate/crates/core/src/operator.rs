//! Application of `Θ` to dense signals.
//!
//! `Θ` can be applied either from its assembled sparse form or in factored
//! form `D_v^{-1/2} H (W D_e^{-1}) Hᵀ D_v^{-1/2}`. Large neighbourhood
//! hyperedges make the assembled form much denser than the incidence matrix,
//! so [`DiffusionOperator::build`] picks whichever needs fewer multiply-adds.

use ndarray::{Array2, ArrayView2};

use crate::hypergraph::{degree_matrices, inv_sqrt_degrees, theta, Hypergraph, SparseOperator};
use crate::sparse::CsrMatrix;

/// A square linear map over node signals (`n × c` dense matrices).
pub trait LinearOperator: Send + Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64>;
}

impl LinearOperator for SparseOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        self.matrix.mul_dense(x)
    }
}

/// `Θ` kept as its factors.
#[derive(Debug, Clone)]
pub struct FactoredTheta {
    incidence: CsrMatrix,
    node_scale: Vec<f64>,
    edge_scale: Vec<f64>,
}

impl FactoredTheta {
    pub fn new(h: &Hypergraph) -> Self {
        let (dv, de) = degree_matrices(h);
        Self {
            incidence: h.incidence().clone(),
            node_scale: inv_sqrt_degrees(&dv),
            edge_scale: h.weights().iter().zip(&de).map(|(w, d)| w / d).collect(),
        }
    }

    /// Multiply-adds per signal column.
    pub fn cost(&self) -> usize {
        2 * self.incidence.nnz()
    }
}

fn scale_rows(x: &mut Array2<f64>, s: &[f64]) {
    for (mut row, &si) in x.rows_mut().into_iter().zip(s) {
        row *= si;
    }
}

impl LinearOperator for FactoredTheta {
    fn dim(&self) -> usize {
        self.incidence.nrows()
    }

    fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        let mut y = x.to_owned();
        scale_rows(&mut y, &self.node_scale);
        let mut z = self.incidence.transpose_mul_dense(y.view());
        scale_rows(&mut z, &self.edge_scale);
        let mut out = self.incidence.mul_dense(z.view());
        scale_rows(&mut out, &self.node_scale);
        out
    }
}

/// `Θ` of one snapshot in whichever representation is cheaper to apply.
#[derive(Debug, Clone)]
pub enum DiffusionOperator {
    Assembled(SparseOperator),
    Factored(FactoredTheta),
}

impl DiffusionOperator {
    pub fn build(h: &Hypergraph) -> Self {
        let factored = FactoredTheta::new(h);
        let assembled = theta(h);
        if assembled.matrix.nnz() <= factored.cost() {
            DiffusionOperator::Assembled(assembled)
        } else {
            DiffusionOperator::Factored(factored)
        }
    }

    pub fn assembled(h: &Hypergraph) -> Self {
        DiffusionOperator::Assembled(theta(h))
    }

    pub fn factored(h: &Hypergraph) -> Self {
        DiffusionOperator::Factored(FactoredTheta::new(h))
    }

    pub fn is_factored(&self) -> bool {
        matches!(self, DiffusionOperator::Factored(_))
    }
}

impl LinearOperator for DiffusionOperator {
    fn dim(&self) -> usize {
        match self {
            DiffusionOperator::Assembled(s) => LinearOperator::dim(s),
            DiffusionOperator::Factored(f) => f.dim(),
        }
    }

    fn apply(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        match self {
            DiffusionOperator::Assembled(s) => s.apply(x),
            DiffusionOperator::Factored(f) => f.apply(x),
        }
    }
}
