use std::collections::BTreeSet;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

/// Macro averages run over the union of true and predicted classes; a class
/// with an empty denominator scores 0. For single-label data the micro
/// averages all equal accuracy.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub micro_precision: f64,
    pub micro_recall: f64,
    pub micro_f1: f64,
    pub support: usize,
}

/// Row-wise argmax; ties resolve to the lowest column.
pub fn argmax_rows(probs: &Array2<f64>) -> Vec<usize> {
    probs
        .rows()
        .into_iter()
        .map(|r| {
            let mut best = 0;
            for (j, &v) in r.iter().enumerate() {
                if v > r[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

pub fn classification_metrics(y_true: &[usize], y_pred: &[usize]) -> Metrics {
    assert_eq!(y_true.len(), y_pred.len());
    let n = y_true.len();
    if n == 0 {
        return Metrics::default();
    }
    let classes: BTreeSet<usize> = y_true.iter().chain(y_pred).copied().collect();
    let correct = y_true.iter().zip(y_pred).filter(|(a, b)| a == b).count();
    let (mut p_sum, mut r_sum, mut f_sum) = (0.0, 0.0, 0.0);
    for &c in &classes {
        let tp = y_true.iter().zip(y_pred).filter(|&(&t, &p)| t == c && p == c).count();
        let predicted = y_pred.iter().filter(|&&p| p == c).count();
        let actual = y_true.iter().filter(|&&t| t == c).count();
        let p = ratio(tp, predicted);
        let r = ratio(tp, actual);
        p_sum += p;
        r_sum += r;
        f_sum += if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    }
    let k = classes.len() as f64;
    let acc = ratio(correct, n);
    Metrics {
        accuracy: acc,
        macro_precision: p_sum / k,
        macro_recall: r_sum / k,
        macro_f1: f_sum / k,
        micro_precision: acc,
        micro_recall: acc,
        micro_f1: acc,
        support: n,
    }
}

/// Metrics of the argmax predictions on `nodes`, which must all be labelled.
pub fn evaluate(probs: &Array2<f64>, labels: &[Option<usize>], nodes: &[usize]) -> Metrics {
    let pred = argmax_rows(probs);
    let y_true: Vec<usize> = nodes.iter().map(|&v| labels[v].expect("evaluated node is labelled")).collect();
    let y_pred: Vec<usize> = nodes.iter().map(|&v| pred[v]).collect();
    classification_metrics(&y_true, &y_pred)
}
