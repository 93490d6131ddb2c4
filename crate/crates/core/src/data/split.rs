use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::LabeledSplit;

/// Stratified split of the labelled nodes.
///
/// The training set takes `round(ratio · L)` of the `L` labelled nodes,
/// apportioned to classes by largest remainder (ties to the lower class).
/// Each class's remaining nodes are halved between validation and test; odd
/// remainders give the extra node alternately to validation and test, in
/// class order. Node sets are returned sorted.
pub fn split_by_ratio(labels: &[Option<usize>], num_classes: usize, ratio: f64, seed: u64) -> Result<LabeledSplit> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!("label ratio must lie in (0, 1), got {ratio}")));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); num_classes];
    for (v, l) in labels.iter().enumerate() {
        if let Some(c) = *l {
            if c >= num_classes {
                return Err(Error::Config(format!("node {v} has label {c} but there are {num_classes} classes")));
            }
            by_class[c].push(v);
        }
    }
    let total: usize = by_class.iter().map(Vec::len).sum();
    if total == 0 {
        return Err(Error::Config("no labelled nodes to split".into()));
    }
    let target = (ratio * total as f64).round() as usize;
    let quotas: Vec<f64> = by_class.iter().map(|c| ratio * c.len() as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut order: Vec<usize> = (0..num_classes).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut missing = target.saturating_sub(counts.iter().sum());
    for &c in order.iter().cycle().take(num_classes * 2) {
        if missing == 0 {
            break;
        }
        if counts[c] < by_class[c].len() {
            counts[c] += 1;
            missing -= 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut val, mut test) = (Vec::new(), Vec::new(), Vec::new());
    let mut extra_to_val = true;
    for (c, nodes) in by_class.iter_mut().enumerate() {
        nodes.shuffle(&mut rng);
        let rest = nodes.len() - counts[c];
        let mut n_val = rest / 2;
        if rest % 2 == 1 {
            if extra_to_val {
                n_val += 1;
            }
            extra_to_val = !extra_to_val;
        }
        train.extend_from_slice(&nodes[..counts[c]]);
        val.extend_from_slice(&nodes[counts[c]..counts[c] + n_val]);
        test.extend_from_slice(&nodes[counts[c] + n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(LabeledSplit {
        labels: labels.to_vec(),
        num_classes,
        train,
        val,
        test,
        ratio,
    })
}
