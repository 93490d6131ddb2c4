//! Typed, weighted hypergraphs and the node-to-node operators derived from
//! their incidence structure.
//!
//! With incidence `H` (nodes × hyperedges), hyperedge weights `W`, node degrees
//! `D_v(i) = Σ_e W(e) H(i,e)` and hyperedge degrees `D_e(e) = Σ_v H(v,e)`:
//!
//! ```text
//! Θ      = D_v^{-1/2} H W D_e^{-1} Hᵀ D_v^{-1/2}
//! Δ      = I − Θ
//! A^h    = H W D_e^{-1} Hᵀ − D_v
//! A^norm = Θ − I
//! ```
//!
//! Zero-degree nodes use the pseudo-inverse convention `0^{-1/2} = 0`, which
//! leaves their rows and columns of `Θ` empty.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::sparse::{CsrMatrix, PRUNE_EPS};

pub const DEFAULT_NODE_TYPE: &str = "node";

#[derive(Debug, Clone, PartialEq)]
pub struct Hyperedge {
    pub id: String,
    pub type_tag: String,
    /// Sorted, duplicate-free member node ids.
    pub members: Vec<usize>,
}

impl Hyperedge {
    pub fn new(id: impl Into<String>, type_tag: impl Into<String>, mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        Self {
            id: id.into(),
            type_tag: type_tag.into(),
            members,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hypergraph {
    num_nodes: usize,
    node_types: Vec<String>,
    edges: Vec<Hyperedge>,
    weights: Vec<f64>,
    incidence: CsrMatrix,
}

impl Hypergraph {
    /// Validates the hyperedges and builds the incidence matrix.
    pub fn new(
        num_nodes: usize,
        node_types: Vec<String>,
        edges: Vec<Hyperedge>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if node_types.len() != num_nodes {
            return Err(Error::InvalidHypergraph(format!(
                "{} node types for {} nodes",
                node_types.len(),
                num_nodes
            )));
        }
        if weights.len() != edges.len() {
            return Err(Error::InvalidHypergraph(format!(
                "{} weights for {} hyperedges",
                weights.len(),
                edges.len()
            )));
        }
        for (e, w) in edges.iter().zip(&weights) {
            if e.members.is_empty() {
                return Err(Error::InvalidHypergraph(format!("hyperedge `{}` is empty", e.id)));
            }
            if let Some(&bad) = e.members.iter().find(|&&v| v >= num_nodes) {
                return Err(Error::InvalidHypergraph(format!(
                    "hyperedge `{}` references node {bad} but there are {num_nodes} nodes",
                    e.id
                )));
            }
            if !(*w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidHypergraph(format!(
                    "hyperedge `{}` has non-positive weight {w}",
                    e.id
                )));
            }
        }
        let incidence = CsrMatrix::from_triplets(
            num_nodes,
            edges.len(),
            edges
                .iter()
                .enumerate()
                .flat_map(|(j, e)| e.members.iter().map(move |&v| (v, j, 1.0))),
        );
        Ok(Self {
            num_nodes,
            node_types,
            edges,
            weights,
            incidence,
        })
    }

    /// Unit-weight hypergraph with every node of the default type.
    pub fn with_unit_weights(num_nodes: usize, edges: Vec<Hyperedge>) -> Result<Self> {
        let weights = vec![1.0; edges.len()];
        Self::new(num_nodes, vec![DEFAULT_NODE_TYPE.to_string(); num_nodes], edges, weights)
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn node_types(&self) -> &[String] {
        &self.node_types
    }

    pub fn edges(&self) -> &[Hyperedge] {
        &self.edges
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Sparse 0/1 incidence matrix, nodes × hyperedges.
    pub fn incidence(&self) -> &CsrMatrix {
        &self.incidence
    }

    /// Distinct hyperedge type tags in sorted order.
    pub fn edge_types(&self) -> Vec<String> {
        let mut tags: Vec<String> = self.edges.iter().map(|e| e.type_tag.clone()).collect();
        tags.sort();
        tags.dedup();
        tags
    }

    /// Nodes not covered by any hyperedge.
    pub fn isolated_nodes(&self) -> Vec<usize> {
        (0..self.num_nodes)
            .filter(|&i| self.incidence.row(i).0.is_empty())
            .collect()
    }

    /// Adds a unit-weight singleton hyperedge of type `type_tag` for every isolated node.
    pub fn with_isolated_self_loops(&self, type_tag: &str) -> Result<Self> {
        let mut edges = self.edges.clone();
        let mut weights = self.weights.clone();
        for v in self.isolated_nodes() {
            edges.push(Hyperedge::new(format!("{type_tag}:self:{v}"), type_tag, vec![v]));
            weights.push(1.0);
        }
        Self::new(self.num_nodes, self.node_types.clone(), edges, weights)
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# num_nodes={}", self.num_nodes)?;
        for (e, weight) in self.edges.iter().zip(&self.weights) {
            let members: Vec<String> = e.members.iter().map(|m| m.to_string()).collect();
            writeln!(w, "{}\t{}\t{}\t{}", e.id, e.type_tag, weight, members.join(","))?;
        }
        Ok(())
    }

    /// Reads the tab-separated hyperedge format
    /// `edge_id<TAB>type_tag<TAB>weight<TAB>node,node,...`.
    ///
    /// The node count comes from a `# num_nodes=N` comment when present,
    /// otherwise from `num_nodes`, otherwise from the largest member id.
    pub fn read_tsv<R: BufRead>(reader: R, path: &Path, num_nodes: Option<usize>) -> Result<Self> {
        let mut declared = None;
        let mut edges = Vec::new();
        let mut weights = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim_end_matches(['\r', '\n']);
            if line.trim().is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some(n) = comment.trim().strip_prefix("num_nodes=") {
                    declared = Some(
                        n.trim()
                            .parse::<usize>()
                            .map_err(|e| Error::parse(path, lineno + 1, e.to_string()))?,
                    );
                }
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::parse(path, lineno + 1, format!("expected 4 fields, found {}", fields.len())));
            }
            let weight: f64 = fields[2]
                .parse()
                .map_err(|_| Error::parse(path, lineno + 1, format!("bad weight `{}`", fields[2])))?;
            let members = fields[3]
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::parse(path, lineno + 1, format!("bad node id `{s}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            edges.push(Hyperedge::new(fields[0], fields[1], members));
            weights.push(weight);
        }
        let n = declared.or(num_nodes).unwrap_or_else(|| {
            edges
                .iter()
                .flat_map(|e| e.members.iter().copied())
                .max()
                .map_or(0, |m| m + 1)
        });
        Self::new(n, vec![DEFAULT_NODE_TYPE.to_string(); n], edges, weights)
    }
}

/// A sub-hypergraph whose hyperedges all carry one type tag, over the full
/// node universe of its parent.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub hypergraph: Hypergraph,
    pub type_tag: String,
}

impl Snapshot {
    pub fn new(hypergraph: Hypergraph, type_tag: impl Into<String>) -> Result<Self> {
        let type_tag = type_tag.into();
        if let Some(e) = hypergraph.edges().iter().find(|e| e.type_tag != type_tag) {
            return Err(Error::InvalidHypergraph(format!(
                "hyperedge `{}` has type `{}` inside snapshot `{}`",
                e.id, e.type_tag, type_tag
            )));
        }
        Ok(Self { hypergraph, type_tag })
    }

    pub fn num_nodes(&self) -> usize {
        self.hypergraph.num_nodes()
    }
}

/// Square sparse operator over the node set.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    pub matrix: CsrMatrix,
    pub symmetric: bool,
}

impl SparseOperator {
    pub fn new(matrix: CsrMatrix, symmetric: bool) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols(), "operators are square");
        Self { matrix, symmetric }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// `D_v^{-1/2}` with the pseudo-inverse convention for zero degrees.
pub(crate) fn inv_sqrt_degrees(node_degrees: &[f64]) -> Vec<f64> {
    node_degrees
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d.sqrt() } else { 0.0 })
        .collect()
}

/// Node degrees `Σ_e W(e) H(i,e)` and hyperedge degrees `Σ_v H(v,e)`.
pub fn degree_matrices(h: &Hypergraph) -> (Vec<f64>, Vec<f64>) {
    let inc = h.incidence();
    let node_degrees = (0..h.num_nodes())
        .map(|i| inc.row(i).0.iter().map(|&e| h.weights()[e]).sum())
        .collect();
    let edge_degrees = h.edges().iter().map(|e| e.members.len() as f64).collect();
    (node_degrees, edge_degrees)
}

/// `Θ = B Bᵀ` with `B = D_v^{-1/2} H (W D_e^{-1})^{1/2}`; the product form
/// makes `Θ` bitwise symmetric.
pub fn theta(h: &Hypergraph) -> SparseOperator {
    let (dv, de) = degree_matrices(h);
    let left = inv_sqrt_degrees(&dv);
    let right: Vec<f64> = h
        .weights()
        .iter()
        .zip(&de)
        .map(|(w, d)| (w / d).sqrt())
        .collect();
    let b = h.incidence().scale(Some(&left), Some(&right));
    let mut m = b.matmul(&b.transpose());
    m.prune(PRUNE_EPS);
    SparseOperator::new(m, true)
}

/// `Δ = I − Θ`.
pub fn laplacian(theta: &SparseOperator) -> SparseOperator {
    let n = theta.dim();
    SparseOperator::new(
        CsrMatrix::identity(n).add_scaled(1.0, &theta.matrix, -1.0),
        theta.symmetric,
    )
}

/// `A^normalized = Θ − I`.
pub fn normalized_adjacency(h: &Hypergraph) -> SparseOperator {
    let t = theta(h);
    let n = t.dim();
    SparseOperator::new(t.matrix.add_scaled(1.0, &CsrMatrix::identity(n), -1.0), true)
}

/// `A^h = H W D_e^{-1} Hᵀ − D_v`.
pub fn unnormalized_adjacency(h: &Hypergraph) -> SparseOperator {
    let (dv, de) = degree_matrices(h);
    let right: Vec<f64> = h.weights().iter().zip(&de).map(|(w, d)| w / d).collect();
    let hw = h.incidence().scale(None, Some(&right));
    let mut m = hw.matmul(&h.incidence().transpose());
    m = m.add_scaled(1.0, &CsrMatrix::from_diagonal(&dv), -1.0);
    m.prune(PRUNE_EPS);
    SparseOperator::new(m, true)
}

/// Splits `h` into one snapshot per hyperedge type, ordered by type tag.
pub fn split_snapshots(h: &Hypergraph) -> Vec<Snapshot> {
    let mut groups: BTreeMap<&str, (Vec<Hyperedge>, Vec<f64>)> = BTreeMap::new();
    for (e, &w) in h.edges().iter().zip(h.weights()) {
        let g = groups.entry(e.type_tag.as_str()).or_default();
        g.0.push(e.clone());
        g.1.push(w);
    }
    groups
        .into_iter()
        .map(|(tag, (edges, weights))| {
            let hg = Hypergraph::new(h.num_nodes(), h.node_types().to_vec(), edges, weights)
                .expect("sub-hypergraph of a valid hypergraph is valid");
            Snapshot {
                hypergraph: hg,
                type_tag: tag.to_string(),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    fn small() -> Hypergraph {
        // H = [[1,1],[1,1],[0,1]]
        Hypergraph::with_unit_weights(
            3,
            vec![Hyperedge::new("e0", "a", vec![0, 1]), Hyperedge::new("e1", "a", vec![0, 1, 2])],
        )
        .unwrap()
    }

    #[test]
    fn degrees_of_small_example() {
        let (dv, de) = degree_matrices(&small());
        assert_eq!(dv, vec![2.0, 2.0, 1.0]);
        assert_eq!(de, vec![2.0, 3.0]);
    }

    #[test]
    fn single_full_hyperedge_degrees() {
        let n = 6;
        let h = Hypergraph::with_unit_weights(n, vec![Hyperedge::new("e", "t", (0..n).collect())]).unwrap();
        let (dv, de) = degree_matrices(&h);
        assert_eq!(dv, vec![1.0; n]);
        assert_eq!(de, vec![n as f64]);
    }

    #[test]
    fn theta_two_nodes_one_edge() {
        let h = Hypergraph::with_unit_weights(2, vec![Hyperedge::new("e", "t", vec![0, 1])]).unwrap();
        let t = theta(&h);
        let expect = array![[0.5, 0.5], [0.5, 0.5]];
        assert!((t.matrix.to_dense() - &expect).iter().all(|d| d.abs() < 1e-15));
        let l = laplacian(&t);
        assert!((l.matrix.to_dense() - array![[0.5, -0.5], [-0.5, 0.5]]).iter().all(|d| d.abs() < 1e-15));
        let a = normalized_adjacency(&h);
        assert!((a.matrix.to_dense() - array![[-0.5, 0.5], [0.5, -0.5]]).iter().all(|d| d.abs() < 1e-15));
    }

    #[test]
    fn theta_small_example_values() {
        let t = theta(&small()).matrix.to_dense();
        let s = 1.0 / (2.0f64).sqrt() / 3.0; // 0.2357
        let expect = array![
            [5.0 / 12.0, 5.0 / 12.0, s],
            [5.0 / 12.0, 5.0 / 12.0, s],
            [s, s, 1.0 / 3.0]
        ];
        assert!((t - expect).iter().all(|d| d.abs() < 1e-12));
    }

    #[test]
    fn laplacian_of_identity_is_zero() {
        let id = SparseOperator::new(CsrMatrix::identity(4), true);
        assert_eq!(laplacian(&id).matrix.nnz(), 0);
    }

    #[test]
    fn isolated_nodes_give_zero_rows() {
        let h = Hypergraph::with_unit_weights(3, vec![Hyperedge::new("e", "t", vec![0, 1])]).unwrap();
        assert_eq!(h.isolated_nodes(), vec![2]);
        let t = theta(&h).matrix.to_dense();
        assert!(t.row(2).iter().all(|&v| v == 0.0));
        assert!(t.iter().all(|v| v.is_finite()));
        let fixed = h.with_isolated_self_loops("t").unwrap();
        assert_eq!(theta(&fixed).matrix.get(2, 2), 1.0);
    }

    #[test]
    fn validation_errors() {
        assert!(Hypergraph::with_unit_weights(2, vec![Hyperedge::new("e", "t", vec![])]).is_err());
        assert!(Hypergraph::with_unit_weights(2, vec![Hyperedge::new("e", "t", vec![2])]).is_err());
        let bad_weight = Hypergraph::new(
            2,
            vec!["n".into(); 2],
            vec![Hyperedge::new("e", "t", vec![0])],
            vec![0.0],
        );
        assert!(bad_weight.is_err());
    }

    #[test]
    fn split_partitions_by_type() {
        let h = Hypergraph::with_unit_weights(
            4,
            vec![
                Hyperedge::new("1", "b", vec![0]),
                Hyperedge::new("2", "a", vec![1, 2]),
                Hyperedge::new("3", "c", vec![3]),
                Hyperedge::new("4", "a", vec![0, 3]),
            ],
        )
        .unwrap();
        let snaps = split_snapshots(&h);
        let sizes: Vec<(String, usize)> = snaps.iter().map(|s| (s.type_tag.clone(), s.hypergraph.num_edges())).collect();
        assert_eq!(sizes, vec![("a".into(), 2), ("b".into(), 1), ("c".into(), 1)]);
        assert!(snaps.iter().all(|s| s.num_nodes() == 4));
    }

    #[test]
    fn homogeneous_split_is_identity() {
        let h = small();
        let snaps = split_snapshots(&h);
        assert_eq!(snaps.len(), 1);
        assert_eq!(snaps[0].hypergraph, h);
    }

    #[test]
    fn tsv_round_trip() {
        let h = small().with_isolated_self_loops("a").unwrap();
        let mut buf = Vec::new();
        h.write_tsv(&mut buf).unwrap();
        let back = Hypergraph::read_tsv(&buf[..], Path::new("mem"), None).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn unnormalized_adjacency_small() {
        let a = unnormalized_adjacency(&small()).matrix.to_dense();
        let hm = array![[1.0, 1.0], [1.0, 1.0], [0.0, 1.0]];
        let de_inv = Array2::from_diag(&array![0.5, 1.0 / 3.0]);
        let expect = hm.dot(&de_inv).dot(&hm.t()) - Array2::from_diag(&array![2.0, 2.0, 1.0]);
        assert!((a - expect).iter().all(|d| d.abs() < 1e-12));
    }
}
