use std::collections::VecDeque;

use super::SimpleGraph;
use crate::error::{Error, Result};
use crate::hypergraph::{Hyperedge, Hypergraph, Snapshot};

pub const NEIGHBOR_TAG: &str = "neighbor";
pub const DEFAULT_PHI: usize = 3;

/// One hyperedge per node holding the node itself and every node within `phi` hops.
pub fn neighbor_hyperedges(g: &SimpleGraph, phi: usize) -> Result<Snapshot> {
    neighbor_hyperedges_tagged(g, phi, NEIGHBOR_TAG)
}

pub(crate) fn neighbor_hyperedges_tagged(g: &SimpleGraph, phi: usize, tag: &str) -> Result<Snapshot> {
    if phi == 0 {
        return Err(Error::Config("neighbor hop count must be at least 1".into()));
    }
    let n = g.num_nodes();
    let mut dist = vec![usize::MAX; n];
    let mut visited = Vec::new();
    let mut queue = VecDeque::new();
    let mut edges = Vec::with_capacity(n);
    for src in 0..n {
        for &v in &visited {
            dist[v] = usize::MAX;
        }
        visited.clear();
        dist[src] = 0;
        visited.push(src);
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            if dist[u] == phi {
                continue;
            }
            for &w in g.neighbors(u) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    visited.push(w);
                    queue.push_back(w);
                }
            }
        }
        edges.push(Hyperedge::new(format!("{tag}:{src}"), tag, visited.clone()));
    }
    let weights = vec![1.0; edges.len()];
    let hg = Hypergraph::new(n, g.node_types().to_vec(), edges, weights)?;
    Snapshot::new(hg, tag)
}
