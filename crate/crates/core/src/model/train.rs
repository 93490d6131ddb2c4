use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::metrics::evaluate;
use super::optim::{Adam, AdamConfig};
use super::Model;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Labels and disjoint train/validation/test node sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSplit {
    pub labels: Vec<Option<usize>>,
    pub num_classes: usize,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub ratio: f64,
}

impl LabeledSplit {
    /// `(node, class)` pairs of the training set.
    pub fn train_targets(&self) -> Vec<(usize, usize)> {
        self.train.iter().map(|&v| (v, self.labels[v].expect("training node is labelled"))).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.labels.len()];
        for &v in self.train.iter().chain(&self.val).chain(&self.test) {
            if v >= self.labels.len() {
                return Err(Error::Config(format!("split node {v} out of range")));
            }
            if seen[v] {
                return Err(Error::Config(format!("node {v} appears in two split sets")));
            }
            seen[v] = true;
            match self.labels[v] {
                Some(c) if c < self.num_classes => {}
                _ => return Err(Error::Config(format!("split node {v} has no valid label"))),
            }
        }
        Ok(())
    }

    /// Indicator vector for a node set.
    pub fn mask(&self, nodes: &[usize]) -> Vec<bool> {
        let mut m = vec![false; self.labels.len()];
        for &v in nodes {
            m[v] = true;
        }
        m
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub epochs: usize,
    /// Seeds the dropout masks.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            lr: 1e-3,
            epochs: 400,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_acc: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept; 0 when training ran no epochs.
    pub best_epoch: usize,
    pub best_val_acc: f64,
    pub total_seconds: f64,
}

impl History {
    /// `epoch,train_loss,val_acc` rows with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("epoch,train_loss,val_acc\n");
        for r in &self.epochs {
            s.push_str(&format!("{},{},{}\n", r.epoch, r.train_loss, r.val_acc));
        }
        s
    }
}

/// Full-batch Adam. The training loss of each epoch is measured on the
/// parameters before that epoch's update, validation accuracy after it. The
/// model ends holding the parameters with the best validation accuracy
/// (earliest on ties), or the last ones when there is no validation set.
pub fn train(model: &mut Model, x: &CsrMatrix, split: &LabeledSplit, config: &TrainConfig) -> Result<History> {
    split.validate()?;
    if !(config.lr >= 0.0 && config.lr.is_finite()) {
        return Err(Error::Config(format!("learning rate must be non-negative, got {}", config.lr)));
    }
    let started = Instant::now();
    let targets = split.train_targets();
    let train_poly = model.config.train_poly;
    let trainable = move |name: &str| train_poly || !name.starts_with("poly/");
    let mut adam = Adam::new(
        AdamConfig {
            lr: config.lr,
            ..AdamConfig::default()
        },
        &model.params,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut history = History::default();
    let mut best: Option<(f64, usize, super::Params)> = None;
    for epoch in 1..=config.epochs {
        let t0 = Instant::now();
        let fwd = model.forward(x, Some(rng.random()))?;
        let loss = model.loss(&fwd, &targets);
        if !loss.is_finite() {
            return Err(Error::NonFinite(format!("training loss at epoch {epoch}")));
        }
        let grads = model.backward(x, &fwd, &targets);
        drop(fwd);
        adam.step(&mut model.params, &grads, trainable);
        if !model.params.all_finite() {
            return Err(Error::NonFinite(format!("parameters after epoch {epoch}")));
        }
        let val_acc = if split.val.is_empty() {
            0.0
        } else {
            evaluate(&model.predict(x)?, &split.labels, &split.val).accuracy
        };
        if !split.val.is_empty() && best.as_ref().is_none_or(|b| val_acc > b.0) {
            best = Some((val_acc, epoch, model.params.clone()));
        }
        history.epochs.push(EpochRecord {
            epoch,
            train_loss: loss,
            val_acc,
            seconds: t0.elapsed().as_secs_f64(),
        });
    }
    match best {
        Some((acc, epoch, params)) => {
            model.params = params;
            history.best_epoch = epoch;
            history.best_val_acc = acc;
        }
        None => {
            history.best_epoch = config.epochs;
            history.best_val_acc = history.epochs.last().map_or(0.0, |r| r.val_acc);
        }
    }
    history.total_seconds = started.elapsed().as_secs_f64();
    Ok(history)
}
