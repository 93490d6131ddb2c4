use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::hypergraph::{Hyperedge, Hypergraph, Snapshot, DEFAULT_NODE_TYPE};

/// Categorical attributes: for each attribute name, an optional value per node.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AttributeTable {
    num_nodes: usize,
    columns: BTreeMap<String, Vec<Option<String>>>,
}

impl AttributeTable {
    pub fn new(num_nodes: usize) -> Self {
        Self {
            num_nodes,
            columns: BTreeMap::new(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    /// Records `node.attr = value`. A second, different value for the same
    /// node and attribute is an error.
    pub fn set(&mut self, node: usize, attr: &str, value: &str) -> Result<()> {
        if node >= self.num_nodes {
            return Err(Error::Config(format!("attribute row for node {node} out of range")));
        }
        let col = self
            .columns
            .entry(attr.to_string())
            .or_insert_with(|| vec![None; self.num_nodes]);
        match &col[node] {
            Some(old) if old != value => Err(Error::Config(format!(
                "node {node} has two values for attribute `{attr}`: `{old}` and `{value}`"
            ))),
            _ => {
                col[node] = Some(value.to_string());
                Ok(())
            }
        }
    }

    pub fn attributes(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn column(&self, attr: &str) -> Option<&[Option<String>]> {
        self.columns.get(attr).map(Vec::as_slice)
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    /// `(node, attribute, value)` rows in attribute-then-node order.
    pub fn rows(&self) -> impl Iterator<Item = (usize, &str, &str)> {
        self.columns.iter().flat_map(|(a, col)| {
            col.iter()
                .enumerate()
                .filter_map(move |(v, val)| val.as_deref().map(|val| (v, a.as_str(), val)))
        })
    }
}

/// One snapshot per attribute; each hyperedge joins the nodes sharing one value.
pub fn attribute_hyperedges(attrs: &AttributeTable) -> Result<Vec<Snapshot>> {
    let n = attrs.num_nodes();
    attrs
        .columns
        .iter()
        .map(|(name, col)| {
            let tag = format!("attr:{name}");
            let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
            for (v, val) in col.iter().enumerate() {
                if let Some(val) = val {
                    groups.entry(val.as_str()).or_default().push(v);
                }
            }
            let edges: Vec<Hyperedge> = groups
                .into_iter()
                .map(|(val, members)| Hyperedge::new(format!("{tag}={val}"), tag.as_str(), members))
                .collect();
            let weights = vec![1.0; edges.len()];
            let hg = Hypergraph::new(n, vec![DEFAULT_NODE_TYPE.to_string(); n], edges, weights)?;
            Snapshot::new(hg, tag)
        })
        .collect()
}
