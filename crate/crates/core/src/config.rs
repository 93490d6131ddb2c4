//! Run configuration, read from TOML. Every field has a default and unknown
//! keys are rejected.
//!
//! ```toml
//! dataset = "data/cora"
//! seed = 0
//! label_ratio = 0.5
//!
//! [[recipe]]
//! kind = "neighbor"
//! phi = 3
//!
//! [[recipe]]
//! kind = "cluster"
//!
//! [[recipe]]
//! kind = "community"
//!
//! [model]
//! mode = "full"
//! k_order = 2
//!
//! [train]
//! lr = 0.001
//! epochs = 400
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::construct::DEFAULT_PHI;
use crate::error::{Error, Result};
use crate::model::{ModelConfig, TrainConfig};

/// One hyperedge construction step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum RecipeItem {
    /// A hyperedge per node covering its `phi`-hop neighbourhood, optionally
    /// over a meta-path subgraph such as `"A-P-A"`.
    Neighbor {
        #[serde(default = "default_phi")]
        phi: usize,
        #[serde(default)]
        metapath: Option<String>,
    },
    /// One snapshot per categorical node attribute.
    Attribute,
    /// k-means clusters of the feature rows; `k` defaults to the class count,
    /// or `⌈√n⌉` without labels.
    Cluster {
        #[serde(default)]
        k: Option<usize>,
    },
    /// Louvain communities, optionally over a meta-path subgraph.
    Community {
        #[serde(default)]
        metapath: Option<String>,
    },
}

fn default_phi() -> usize {
    DEFAULT_PHI
}

impl RecipeItem {
    pub fn parse_list(s: &str) -> Result<Vec<RecipeItem>> {
        s.split(',').map(|t| t.trim()).filter(|t| !t.is_empty()).map(Self::parse).collect()
    }

    /// Short forms: `neighbor`, `neighbor(2)`, `attribute`, `cluster`,
    /// `cluster(7)`, `community`.
    pub fn parse(s: &str) -> Result<RecipeItem> {
        let (name, arg) = match s.split_once('(') {
            Some((n, rest)) => {
                let arg = rest
                    .strip_suffix(')')
                    .ok_or_else(|| Error::Config(format!("unbalanced recipe item `{s}`")))?;
                let v = arg
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Config(format!("recipe argument in `{s}` is not a count")))?;
                (n.trim(), Some(v))
            }
            None => (s.trim(), None),
        };
        match (name, arg) {
            ("neighbor", a) => Ok(RecipeItem::Neighbor {
                phi: a.unwrap_or(DEFAULT_PHI),
                metapath: None,
            }),
            ("attribute", None) => Ok(RecipeItem::Attribute),
            ("cluster", k) => Ok(RecipeItem::Cluster { k }),
            ("community", None) => Ok(RecipeItem::Community { metapath: None }),
            _ => Err(Error::Config(format!("unknown recipe item `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HypergraphOptions {
    /// Give every node missed by a snapshot its own one-node hyperedge
    /// instead of leaving it isolated.
    pub isolated_self_loops: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub lr: f64,
    pub epochs: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            lr: t.lr,
            epochs: t.epochs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub recipe: Vec<RecipeItem>,
    pub hypergraph: HypergraphOptions,
    pub model: ModelConfig,
    pub train: TrainSection,
    pub label_ratio: f64,
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; 0 uses every core.
    pub threads: usize,
    /// Replace the node features by a one-hot identity, letting the
    /// projection matrices act as free node embeddings.
    pub free_embedding: bool,
    /// Orders for the K sweep; the exact wavelet basis is appended when
    /// `sweep_exact` is set.
    pub sweep_orders: Vec<usize>,
    pub sweep_exact: bool,
    pub bench_epochs: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: PathBuf::from("data/cora"),
            recipe: vec![
                RecipeItem::Neighbor {
                    phi: DEFAULT_PHI,
                    metapath: None,
                },
                RecipeItem::Cluster { k: None },
                RecipeItem::Community { metapath: None },
            ],
            hypergraph: HypergraphOptions::default(),
            model: ModelConfig::default(),
            train: TrainSection::default(),
            label_ratio: 0.5,
            seed: 0,
            out: PathBuf::from("out"),
            threads: 0,
            free_embedding: false,
            sweep_orders: vec![1, 2, 3],
            sweep_exact: true,
            bench_epochs: 100,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
            _ => e.into(),
        })?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.train.lr,
            epochs: self.train.epochs,
            seed: self.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.recipe.is_empty() {
            return Err(Error::Config("construction recipe is empty".into()));
        }
        for item in &self.recipe {
            match item {
                RecipeItem::Neighbor { phi: 0, .. } => {
                    return Err(Error::Config("neighbor hop count must be at least 1".into()))
                }
                RecipeItem::Cluster { k: Some(0) } => return Err(Error::Config("cluster count must be at least 1".into())),
                _ => {}
            }
        }
        if !(self.label_ratio > 0.0 && self.label_ratio < 1.0) {
            return Err(Error::Config(format!("label ratio must lie in (0, 1), got {}", self.label_ratio)));
        }
        if !(self.train.lr >= 0.0 && self.train.lr.is_finite()) {
            return Err(Error::Config(format!("learning rate must be non-negative, got {}", self.train.lr)));
        }
        self.model.validate()
    }
}
