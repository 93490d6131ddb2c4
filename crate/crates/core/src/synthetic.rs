//! Seeded generators for random hypergraphs and citation-like datasets.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::construct::{AttributeTable, FeatureMatrix, SimpleGraph};
use crate::data::{Dataset, LoadWarnings};
use crate::error::Result;
use crate::hypergraph::{Hyperedge, Hypergraph, DEFAULT_NODE_TYPE};

/// A hypergraph on `n` nodes with `m` hyperedges of 1 to `max_size` members,
/// weights drawn from `(0, max_weight]`, hyperedge types from `types`.
pub fn random_hypergraph(rng: &mut impl Rng, n: usize, m: usize, max_size: usize, max_weight: f64, types: &[&str]) -> Hypergraph {
    let edges: Vec<Hyperedge> = (0..m)
        .map(|e| {
            let size = rng.random_range(1..=max_size.min(n));
            let members = (0..size).map(|_| rng.random_range(0..n)).collect();
            let tag = types[rng.random_range(0..types.len())];
            Hyperedge::new(format!("e{e}"), tag, members)
        })
        .collect();
    let weights = (0..m).map(|_| max_weight * (1.0 - rng.random::<f64>())).collect();
    Hypergraph::new(n, vec![DEFAULT_NODE_TYPE.to_string(); n], edges, weights).expect("generated hypergraph is valid")
}

/// Shape of a planted-partition citation graph.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub nodes: usize,
    pub classes: usize,
    pub features: usize,
    /// Mean node degree.
    pub avg_degree: f64,
    /// Probability that an edge stays inside its class.
    pub homophily: f64,
    /// Active binary features per node.
    pub words_per_node: usize,
    /// Probability that an active feature comes from the class's own block.
    pub signal: f64,
}

impl Default for PlantedSpec {
    /// Roughly the size and sparsity of a small citation network.
    fn default() -> Self {
        Self {
            nodes: 600,
            classes: 5,
            features: 300,
            avg_degree: 4.0,
            homophily: 0.8,
            words_per_node: 12,
            signal: 0.4,
        }
    }
}

/// Labelled dataset whose edges prefer same-class endpoints and whose binary
/// features over-sample a class-specific block of the vocabulary.
pub fn planted_dataset(spec: &PlantedSpec, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.nodes;
    let labels: Vec<usize> = (0..n).map(|v| v % spec.classes).collect();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); spec.classes];
    for (v, &c) in labels.iter().enumerate() {
        by_class[c].push(v);
    }
    let target = (spec.avg_degree * n as f64 / 2.0).round() as usize;
    let mut edges = Vec::with_capacity(target);
    let mut seen = std::collections::HashSet::new();
    let mut guard = 0;
    while edges.len() < target && guard < target * 50 {
        guard += 1;
        let u = rng.random_range(0..n);
        let v = if rng.random::<f64>() < spec.homophily {
            let pool = &by_class[labels[u]];
            pool[rng.random_range(0..pool.len())]
        } else {
            rng.random_range(0..n)
        };
        if u != v && seen.insert((u.min(v), u.max(v))) {
            edges.push((u.min(v), u.max(v), "cites".to_string()));
        }
    }
    let block = (spec.features / spec.classes).max(1);
    let mut x = Array2::zeros((n, spec.features));
    for v in 0..n {
        for _ in 0..spec.words_per_node {
            let j = if rng.random::<f64>() < spec.signal {
                (labels[v] * block + rng.random_range(0..block)).min(spec.features - 1)
            } else {
                rng.random_range(0..spec.features)
            };
            x[[v, j]] = 1.0;
        }
    }
    Ok(Dataset {
        name: "planted".into(),
        node_ids: (0..n).map(|v| v.to_string()).collect(),
        graph: SimpleGraph::new(n, vec!["paper".to_string(); n], edges)?,
        features: FeatureMatrix::new(x)?,
        labels: labels.into_iter().map(Some).collect(),
        class_names: (0..spec.classes).map(|c| format!("class{c}")).collect(),
        attributes: AttributeTable::new(n),
        warnings: LoadWarnings::default(),
    })
}
