use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::SimpleGraph;
use crate::error::{Error, Result};
use crate::hypergraph::{Hyperedge, Hypergraph, Snapshot};

/// Passes stop once a pass improves modularity by less than this.
pub const MIN_MODULARITY_GAIN: f64 = 1e-7;
pub const COMMUNITY_TAG: &str = "community";
const MAX_SWEEPS: usize = 10_000;

#[derive(Debug, Clone)]
pub struct LouvainResult {
    /// Communities sorted by smallest member; members sorted.
    pub communities: Vec<Vec<usize>>,
    /// Community index per node, consistent with `communities`.
    pub membership: Vec<usize>,
    /// Modularity of the singleton partition followed by the value after each
    /// accepted pass.
    pub modularity_history: Vec<f64>,
    pub passes: usize,
}

impl LouvainResult {
    pub fn modularity(&self) -> f64 {
        *self.modularity_history.last().unwrap_or(&0.0)
    }
}

/// Weighted undirected graph used between passes. A self-loop entry stores
/// `A_ii`, i.e. twice the weight of the edges folded into the node.
struct WeightedGraph {
    adj: Vec<Vec<(usize, f64)>>,
    strength: Vec<f64>,
    two_m: f64,
}

impl WeightedGraph {
    fn from_simple(g: &SimpleGraph) -> Self {
        let adj: Vec<Vec<(usize, f64)>> = (0..g.num_nodes())
            .map(|v| g.neighbors(v).iter().map(|&u| (u, 1.0)).collect())
            .collect();
        Self::from_adj(adj)
    }

    fn from_adj(adj: Vec<Vec<(usize, f64)>>) -> Self {
        let strength: Vec<f64> = adj.iter().map(|row| row.iter().map(|&(_, w)| w).sum()).collect();
        let two_m = strength.iter().sum();
        Self { adj, strength, two_m }
    }

    fn len(&self) -> usize {
        self.adj.len()
    }

    fn modularity(&self, comm: &[usize], ncomm: usize) -> f64 {
        let mut inner = vec![0.0; ncomm];
        let mut tot = vec![0.0; ncomm];
        for (i, row) in self.adj.iter().enumerate() {
            tot[comm[i]] += self.strength[i];
            for &(j, w) in row {
                if comm[j] == comm[i] {
                    inner[comm[i]] += w;
                }
            }
        }
        inner
            .iter()
            .zip(&tot)
            .map(|(&a, &t)| a / self.two_m - (t / self.two_m).powi(2))
            .sum()
    }

    /// Local moving phase. Returns the relabelled partition (labels in order of
    /// first appearance) and whether any node moved.
    fn local_moving(&self, rng: &mut ChaCha8Rng) -> (Vec<usize>, usize, bool) {
        let n = self.len();
        let mut comm: Vec<usize> = (0..n).collect();
        let mut tot = self.strength.clone();
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        let mut weight_to = vec![0.0; n];
        let mut seen = vec![false; n];
        let mut touched = Vec::new();
        let mut moved_any = false;
        for _ in 0..MAX_SWEEPS {
            let mut moved = false;
            for &i in &order {
                let ki = self.strength[i];
                let old = comm[i];
                touched.clear();
                for &(j, w) in &self.adj[i] {
                    if j == i {
                        continue;
                    }
                    let c = comm[j];
                    if !seen[c] {
                        seen[c] = true;
                        weight_to[c] = 0.0;
                        touched.push(c);
                    }
                    weight_to[c] += w;
                }
                tot[old] -= ki;
                let own = if seen[old] { weight_to[old] } else { 0.0 };
                let mut best = (old, own - tot[old] * ki / self.two_m);
                touched.sort_unstable();
                for &c in &touched {
                    let gain = weight_to[c] - tot[c] * ki / self.two_m;
                    if gain > best.1 {
                        best = (c, gain);
                    }
                }
                for &c in &touched {
                    seen[c] = false;
                }
                tot[best.0] += ki;
                if best.0 != old {
                    comm[i] = best.0;
                    moved = true;
                    moved_any = true;
                }
            }
            if !moved {
                break;
            }
        }
        let mut relabel = vec![usize::MAX; n];
        let mut next = 0;
        for c in comm.iter_mut() {
            if relabel[*c] == usize::MAX {
                relabel[*c] = next;
                next += 1;
            }
            *c = relabel[*c];
        }
        (comm, next, moved_any)
    }

    fn aggregate(&self, comm: &[usize], ncomm: usize) -> WeightedGraph {
        let mut rows: Vec<std::collections::BTreeMap<usize, f64>> = vec![Default::default(); ncomm];
        for (i, row) in self.adj.iter().enumerate() {
            for &(j, w) in row {
                *rows[comm[i]].entry(comm[j]).or_insert(0.0) += w;
            }
        }
        WeightedGraph::from_adj(rows.into_iter().map(|r| r.into_iter().collect()).collect())
    }
}

/// Louvain modularity maximisation (resolution 1): local moving followed by
/// community aggregation, repeated until a pass gains less than
/// [`MIN_MODULARITY_GAIN`]. Node visiting order is shuffled from `seed`.
pub fn louvain(g: &SimpleGraph, seed: u64) -> Result<LouvainResult> {
    if g.num_edges() == 0 {
        return Err(Error::InvalidGraph("community detection needs at least one edge".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = g.num_nodes();
    let mut graph = WeightedGraph::from_simple(g);
    let mut membership: Vec<usize> = (0..n).collect();
    let singletons: Vec<usize> = (0..n).collect();
    let mut history = vec![graph.modularity(&singletons, n)];
    let mut passes = 0;
    loop {
        let (comm, ncomm, moved) = graph.local_moving(&mut rng);
        if !moved {
            break;
        }
        let q = graph.modularity(&comm, ncomm);
        let prev = *history.last().unwrap();
        if q <= prev {
            break;
        }
        passes += 1;
        history.push(q);
        for m in membership.iter_mut() {
            *m = comm[*m];
        }
        graph = graph.aggregate(&comm, ncomm);
        if q - prev < MIN_MODULARITY_GAIN {
            break;
        }
    }
    let mut communities: Vec<Vec<usize>> = Vec::new();
    let mut index = std::collections::BTreeMap::new();
    for (v, &c) in membership.iter().enumerate() {
        let k = *index.entry(c).or_insert_with(|| {
            communities.push(Vec::new());
            communities.len() - 1
        });
        communities[k].push(v);
    }
    let membership = membership.iter().map(|c| index[c]).collect();
    Ok(LouvainResult {
        communities,
        membership,
        modularity_history: history,
        passes,
    })
}

/// Newman modularity of a node partition of `g`, resolution 1.
pub fn modularity(g: &SimpleGraph, membership: &[usize]) -> f64 {
    let graph = WeightedGraph::from_simple(g);
    let ncomm = membership.iter().max().map_or(0, |m| m + 1);
    graph.modularity(membership, ncomm)
}

/// Louvain communities as hyperedges of a single snapshot.
pub fn community_hyperedges(g: &SimpleGraph, seed: u64) -> Result<Snapshot> {
    community_hyperedges_tagged(g, seed, COMMUNITY_TAG)
}

pub(crate) fn community_hyperedges_tagged(g: &SimpleGraph, seed: u64, tag: &str) -> Result<Snapshot> {
    let res = louvain(g, seed)?;
    let edges: Vec<Hyperedge> = res
        .communities
        .into_iter()
        .enumerate()
        .map(|(c, m)| Hyperedge::new(format!("{tag}:{c}"), tag, m))
        .collect();
    let weights = vec![1.0; edges.len()];
    let hg = Hypergraph::new(g.num_nodes(), g.node_types().to_vec(), edges, weights)?;
    Snapshot::new(hg, tag)
}
