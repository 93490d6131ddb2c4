//! Hypergraph construction from a simple graph and node features.
//!
//! Four hyperedge families are supported: φ-hop neighbourhoods, shared
//! categorical attribute values, k-means clusters of the feature rows, and
//! Louvain communities. Heterogeneous simple graphs can first be filtered into
//! meta-path snapshots.

mod attribute;
mod kmeans;
mod louvain;
mod neighbor;

use std::collections::BTreeSet;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::hypergraph::{Hyperedge, Hypergraph, Snapshot};
use crate::sparse::CsrMatrix;

pub use attribute::{attribute_hyperedges, AttributeTable};
pub use kmeans::{cluster_hyperedges, kmeans, KMeansResult, CLUSTER_TAG, MAX_LLOYD_ITERATIONS};
pub use louvain::{community_hyperedges, louvain, modularity, LouvainResult, COMMUNITY_TAG, MIN_MODULARITY_GAIN};
pub use neighbor::{neighbor_hyperedges, DEFAULT_PHI, NEIGHBOR_TAG};

pub(crate) use louvain::community_hyperedges_tagged;
pub(crate) use neighbor::neighbor_hyperedges_tagged;

/// Undirected simple graph with typed nodes and typed edges.
#[derive(Debug, Clone, PartialEq)]
pub struct SimpleGraph {
    num_nodes: usize,
    node_types: Vec<String>,
    edges: Vec<(usize, usize, String)>,
    adjacency: CsrMatrix,
}

impl SimpleGraph {
    /// Edges are stored with `u < v`; exact duplicates (same endpoints and tag)
    /// collapse. Self-loops are rejected.
    pub fn new(num_nodes: usize, node_types: Vec<String>, edges: Vec<(usize, usize, String)>) -> Result<Self> {
        if node_types.len() != num_nodes {
            return Err(Error::InvalidGraph(format!(
                "{} node types for {} nodes",
                node_types.len(),
                num_nodes
            )));
        }
        let mut set = BTreeSet::new();
        for (u, v, tag) in edges {
            if u >= num_nodes || v >= num_nodes {
                return Err(Error::InvalidGraph(format!("edge ({u}, {v}) out of range for {num_nodes} nodes")));
            }
            if u == v {
                return Err(Error::InvalidGraph(format!("self-loop on node {u}")));
            }
            set.insert((u.min(v), u.max(v), tag));
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut pairs: Vec<(usize, usize)> = edges.iter().map(|(u, v, _)| (*u, *v)).collect();
        pairs.dedup();
        let adjacency = CsrMatrix::from_triplets(
            num_nodes,
            num_nodes,
            pairs.iter().flat_map(|&(u, v)| [(u, v, 1.0), (v, u, 1.0)]),
        );
        Ok(Self {
            num_nodes,
            node_types,
            edges,
            adjacency,
        })
    }

    pub fn untyped(num_nodes: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        Self::new(
            num_nodes,
            vec![crate::hypergraph::DEFAULT_NODE_TYPE.to_string(); num_nodes],
            edges.into_iter().map(|(u, v)| (u, v, "edge".to_string())).collect(),
        )
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

    pub fn edges(&self) -> &[(usize, usize, String)] {
        &self.edges
    }

    pub fn adjacency(&self) -> &CsrMatrix {
        &self.adjacency
    }

    /// Sorted neighbour ids of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        self.adjacency.row(v).0
    }

    pub fn degree(&self, v: usize) -> usize {
        self.neighbors(v).len()
    }
}

/// Sequence of node types, at least two long.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetaPath(Vec<String>);

impl MetaPath {
    pub fn new<S: Into<String>>(types: impl IntoIterator<Item = S>) -> Result<Self> {
        let types: Vec<String> = types.into_iter().map(Into::into).collect();
        if types.len() < 2 {
            return Err(Error::Config(format!("meta-path needs at least two node types, got {types:?}")));
        }
        Ok(Self(types))
    }

    /// Parses `A-P-A` style notation.
    pub fn parse(s: &str) -> Result<Self> {
        Self::new(s.split('-').map(str::trim))
    }

    pub fn types(&self) -> &[String] {
        &self.0
    }

    pub fn name(&self) -> String {
        self.0.join("-")
    }
}

/// Dense node feature matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix(Array2<f64>);

impl FeatureMatrix {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature matrix".into()));
        }
        Ok(Self(values))
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Array2<f64> {
        self.0
    }

    pub fn nrows(&self) -> usize {
        self.0.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.0.ncols()
    }
}

/// Filters `g` along a meta-path.
///
/// Two-type paths keep exactly the edges whose endpoint types match the pair.
/// Longer paths connect two distinct endpoint nodes whenever at least one walk
/// following the type sequence joins them; the result is unweighted and its
/// edges are tagged with the path name.
pub fn metapath_snapshot(g: &SimpleGraph, path: &MetaPath) -> Result<SimpleGraph> {
    let known: BTreeSet<&str> = g.node_types().iter().map(String::as_str).collect();
    for t in path.types() {
        if !known.contains(t.as_str()) {
            return Err(Error::Config(format!("meta-path `{}` uses unknown node type `{t}`", path.name())));
        }
    }
    let types = path.types();
    let ty = |v: usize| g.node_types()[v].as_str();
    let edges = if types.len() == 2 {
        let (a, b) = (types[0].as_str(), types[1].as_str());
        g.edges()
            .iter()
            .filter(|(u, v, _)| (ty(*u) == a && ty(*v) == b) || (ty(*u) == b && ty(*v) == a))
            .cloned()
            .collect()
    } else {
        let tag = path.name();
        let mut out = BTreeSet::new();
        for start in (0..g.num_nodes()).filter(|&v| ty(v) == types[0]) {
            let mut frontier = BTreeSet::from([start]);
            for t in &types[1..] {
                frontier = frontier
                    .iter()
                    .flat_map(|&u| g.neighbors(u).iter().copied())
                    .filter(|&w| ty(w) == t.as_str())
                    .collect();
                if frontier.is_empty() {
                    break;
                }
            }
            for end in frontier {
                if end != start {
                    out.insert((start.min(end), start.max(end)));
                }
            }
        }
        out.into_iter().map(|(u, v)| (u, v, tag.clone())).collect()
    };
    SimpleGraph::new(g.num_nodes(), g.node_types().to_vec(), edges)
}

/// Merges snapshots over a shared node universe into one heterogeneous hypergraph.
pub fn assemble(snapshots: &[Snapshot]) -> Result<Hypergraph> {
    let first = snapshots
        .first()
        .ok_or_else(|| Error::Config("cannot assemble an empty list of snapshots".into()))?;
    let n = first.num_nodes();
    let mut seen = BTreeSet::new();
    let mut edges: Vec<Hyperedge> = Vec::new();
    let mut weights = Vec::new();
    for s in snapshots {
        if s.num_nodes() != n {
            return Err(Error::InvalidHypergraph(format!(
                "snapshot `{}` has {} nodes, expected {n}",
                s.type_tag,
                s.num_nodes()
            )));
        }
        if !seen.insert(s.type_tag.clone()) {
            return Err(Error::InvalidHypergraph(format!("duplicate snapshot type `{}`", s.type_tag)));
        }
        edges.extend(s.hypergraph.edges().iter().cloned());
        weights.extend_from_slice(s.hypergraph.weights());
    }
    Hypergraph::new(n, first.hypergraph.node_types().to_vec(), edges, weights)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypergraph::split_snapshots;

    fn typed(types: &[&str], edges: &[(usize, usize, &str)]) -> SimpleGraph {
        SimpleGraph::new(
            types.len(),
            types.iter().map(|s| s.to_string()).collect(),
            edges.iter().map(|&(u, v, t)| (u, v, t.to_string())).collect(),
        )
        .unwrap()
    }

    #[test]
    fn graph_normalizes_and_dedups() {
        let g = SimpleGraph::untyped(3, [(1, 0), (0, 1), (2, 1)]).unwrap();
        assert_eq!(g.num_edges(), 2);
        assert_eq!(g.neighbors(1), &[0, 2]);
        assert!(SimpleGraph::untyped(2, [(1, 1)]).is_err());
        assert!(SimpleGraph::untyped(2, [(0, 2)]).is_err());
    }

    #[test]
    fn two_type_metapath_keeps_matching_edges() {
        // users 0,1,2 and departments 3,4
        let g = typed(
            &["U", "U", "U", "D", "D"],
            &[(0, 1, "friend"), (1, 2, "friend"), (0, 3, "member"), (2, 4, "member")],
        );
        let ud = metapath_snapshot(&g, &MetaPath::parse("U-D").unwrap()).unwrap();
        let kept: Vec<_> = ud.edges().iter().map(|(u, v, _)| (*u, *v)).collect();
        assert_eq!(kept, vec![(0, 3), (2, 4)]);
        let du = metapath_snapshot(&g, &MetaPath::parse("D-U").unwrap()).unwrap();
        assert_eq!(du.edges(), ud.edges());
        let uu = metapath_snapshot(&g, &MetaPath::parse("U-U").unwrap()).unwrap();
        assert_eq!(uu.num_edges(), 2);
        assert_eq!(uu.num_nodes(), 5);
    }

    #[test]
    fn metapath_without_matches_is_empty() {
        let g = typed(&["U", "U", "D"], &[(0, 1, "friend")]);
        let s = metapath_snapshot(&g, &MetaPath::parse("U-D").unwrap()).unwrap();
        assert_eq!(s.num_edges(), 0);
    }

    #[test]
    fn unknown_type_is_config_error() {
        let g = typed(&["U", "U"], &[(0, 1, "friend")]);
        assert!(matches!(
            metapath_snapshot(&g, &MetaPath::parse("U-X").unwrap()),
            Err(Error::Config(_))
        ));
        assert!(MetaPath::parse("U").is_err());
    }

    #[test]
    fn apa_connects_coauthors() {
        // A0 - P2 - A1, A3 - P4 (alone)
        let g = typed(&["A", "A", "P", "A", "P"], &[(0, 2, "w"), (1, 2, "w"), (3, 4, "w")]);
        let s = metapath_snapshot(&g, &MetaPath::parse("A-P-A").unwrap()).unwrap();
        assert_eq!(s.edges(), &[(0, 1, "A-P-A".to_string())]);
    }

    /// Brute-force enumeration of every type-matching walk.
    fn enumerate_walk_pairs(g: &SimpleGraph, types: &[String]) -> BTreeSet<(usize, usize)> {
        fn rec(g: &SimpleGraph, types: &[String], walk: &mut Vec<usize>, out: &mut BTreeSet<(usize, usize)>) {
            if walk.len() == types.len() {
                let (a, b) = (walk[0], *walk.last().unwrap());
                if a != b {
                    out.insert((a.min(b), a.max(b)));
                }
                return;
            }
            let last = *walk.last().unwrap();
            for w in 0..g.num_nodes() {
                if g.adjacency().get(last, w) != 0.0 && g.node_types()[w] == types[walk.len()] {
                    walk.push(w);
                    rec(g, types, walk, out);
                    walk.pop();
                }
            }
        }
        let mut out = BTreeSet::new();
        for v in 0..g.num_nodes() {
            if g.node_types()[v] == types[0] {
                rec(g, types, &mut vec![v], &mut out);
            }
        }
        out
    }

    #[test]
    fn long_metapaths_match_enumeration_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let n = 14;
            let types: Vec<&str> = (0..n).map(|_| if rng.random_bool(0.5) { "A" } else { "P" }).collect();
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.random_bool(0.2) {
                        edges.push((u, v, "e"));
                    }
                }
            }
            let g = typed(&types, &edges);
            for p in ["A-P-A", "P-A-P", "A-P-P-A", "A-A-A"] {
                let mp = MetaPath::parse(p).unwrap();
                if !mp.types().iter().all(|t| g.node_types().contains(t)) {
                    continue;
                }
                let got: BTreeSet<(usize, usize)> =
                    metapath_snapshot(&g, &mp).unwrap().edges().iter().map(|(u, v, _)| (*u, *v)).collect();
                assert_eq!(got, enumerate_walk_pairs(&g, mp.types()), "path {p}");
            }
        }
    }

    #[test]
    fn assemble_rules() {
        assert!(assemble(&[]).is_err());
        let h = Hypergraph::with_unit_weights(3, vec![Hyperedge::new("x", "a", vec![0, 1])]).unwrap();
        let s = Snapshot::new(h.clone(), "a").unwrap();
        assert_eq!(assemble(std::slice::from_ref(&s)).unwrap(), h);
        assert!(assemble(&[s.clone(), s.clone()]).is_err());
        let other = Snapshot::new(
            Hypergraph::with_unit_weights(3, vec![Hyperedge::new("y", "b", vec![2])]).unwrap(),
            "b",
        )
        .unwrap();
        let merged = assemble(&[s.clone(), other.clone()]).unwrap();
        assert_eq!(split_snapshots(&merged), vec![s, other]);
    }
}
