use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::FeatureMatrix;
use crate::error::{Error, Result};
use crate::hypergraph::{Hyperedge, Hypergraph, Snapshot};

pub const MAX_LLOYD_ITERATIONS: usize = 300;
pub const CLUSTER_TAG: &str = "cluster";

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub assignments: Vec<usize>,
    pub centroids: Array2<f64>,
    /// Inertia after every assignment step, starting with the assignment to
    /// the seeded initial centroids.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl KMeansResult {
    pub fn inertia(&self) -> f64 {
        *self.inertia_history.last().unwrap_or(&0.0)
    }
}

fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Seeded D²-weighted (k-means++) choice of initial centroids.
fn init_centroids(points: ArrayView2<'_, f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = points.nrows();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(points.row(i), points.row(chosen[0]))).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if d > 0.0 && target < d {
                    pick = i;
                    break;
                }
                target -= d;
            }
            while d2[pick] == 0.0 {
                pick -= 1;
            }
            pick
        } else {
            // Every point coincides with a centroid; fall back to unused indices.
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(points.row(i), points.row(next)));
        }
    }
    points.select(Axis(0), &chosen)
}

fn assign(points: ArrayView2<'_, f64>, centroids: &Array2<f64>, out: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (i, slot) in out.iter_mut().enumerate() {
        let mut best = (0, f64::INFINITY);
        for (c, centroid) in centroids.rows().into_iter().enumerate() {
            let d = sq_dist(points.row(i), centroid);
            if d < best.1 {
                best = (c, d);
            }
        }
        *slot = best.0;
        inertia += best.1;
    }
    inertia
}

/// Lloyd's algorithm from seeded k-means++ centroids. Runs until the
/// assignment stops changing or [`MAX_LLOYD_ITERATIONS`] is reached. Ties go
/// to the lowest cluster index; empty clusters keep their previous centroid.
pub fn kmeans(points: ArrayView2<'_, f64>, k: usize, seed: u64) -> Result<KMeansResult> {
    let n = points.nrows();
    if k == 0 || k > n {
        return Err(Error::Config(format!("k-means needs 1 <= k <= {n}, got k = {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = init_centroids(points, k, &mut rng);
    let mut assignments = vec![0; n];
    let mut history = vec![assign(points, &centroids, &mut assignments)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_LLOYD_ITERATIONS {
        iterations += 1;
        let mut sums = Array2::<f64>::zeros(centroids.raw_dim());
        let mut counts = vec![0usize; k];
        for (i, &c) in assignments.iter().enumerate() {
            sums.row_mut(c).scaled_add(1.0, &points.row(i));
            counts[c] += 1;
        }
        for (c, &count) in counts.iter().enumerate() {
            if count > 0 {
                let mean = &sums.row(c) / count as f64;
                centroids.row_mut(c).assign(&mean);
            }
        }
        let mut next = vec![0; n];
        let inertia = assign(points, &centroids, &mut next);
        history.push(inertia);
        if next == assignments {
            converged = true;
            break;
        }
        assignments = next;
    }
    Ok(KMeansResult {
        assignments,
        centroids,
        inertia_history: history,
        iterations,
        converged,
    })
}

/// Clusters length-normalised feature rows (so squared distance tracks cosine
/// dissimilarity) and turns every non-empty cluster into a hyperedge.
///
/// All-zero rows have no direction; they take no part in the clustering and
/// are placed in cluster 0.
pub fn cluster_hyperedges(x: &FeatureMatrix, k: usize, seed: u64) -> Result<Snapshot> {
    let n = x.nrows();
    if k == 0 || k > n {
        return Err(Error::Config(format!("cluster count must satisfy 1 <= k <= {n}, got {k}")));
    }
    let norms: Vec<f64> = x.view().rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
    let active: Vec<usize> = (0..n).filter(|&i| norms[i] > 0.0).collect();
    let mut labels = vec![0usize; n];
    if !active.is_empty() {
        let mut pts = x.view().select(Axis(0), &active);
        for (mut row, &i) in pts.rows_mut().into_iter().zip(&active) {
            row /= norms[i];
        }
        let res = kmeans(pts.view(), k.min(active.len()), seed)?;
        for (&i, &c) in active.iter().zip(&res.assignments) {
            labels[i] = c;
        }
    }
    let mut groups = vec![Vec::new(); k];
    for (i, &c) in labels.iter().enumerate() {
        groups[c].push(i);
    }
    let edges: Vec<Hyperedge> = groups
        .into_iter()
        .enumerate()
        .filter(|(_, m)| !m.is_empty())
        .map(|(c, m)| Hyperedge::new(format!("{CLUSTER_TAG}:{c}"), CLUSTER_TAG, m))
        .collect();
    let weights = vec![1.0; edges.len()];
    let hg = Hypergraph::new(
        n,
        vec![crate::hypergraph::DEFAULT_NODE_TYPE.to_string(); n],
        edges,
        weights,
    )?;
    Snapshot::new(hg, CLUSTER_TAG)
}
