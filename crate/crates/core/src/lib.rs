//! Hypergraph wavelet neural networks for semi-supervised node classification.

pub mod config;
pub mod construct;
pub mod data;
pub mod model;
pub mod error;
pub mod hypergraph;
pub mod operator;
pub mod pipeline;
pub mod sparse;
pub mod spectral;
pub mod synthetic;
pub mod validate;

pub use error::{Error, Result};
pub use hypergraph::{Hyperedge, Hypergraph, Snapshot, SparseOperator};
pub use operator::{DiffusionOperator, LinearOperator};
pub use sparse::CsrMatrix;
