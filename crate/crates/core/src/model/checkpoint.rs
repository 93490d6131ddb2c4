//! Checkpoint container: magic bytes, a little-endian `u64` header length,
//! a JSON header naming every tensor and its shape, then the tensor values
//! as little-endian `f64` in header order.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Model, ModelConfig};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"HWNNCKPT";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub version: u32,
    pub config: ModelConfig,
    pub tags: Vec<String>,
    pub num_nodes: usize,
    pub in_dim: usize,
    pub num_classes: usize,
    pub tensors: Vec<TensorEntry>,
    /// Free-form context such as the run configuration.
    #[serde(default)]
    pub extra: serde_json::Value,
}

pub fn save_checkpoint(model: &Model, extra: serde_json::Value, path: &Path) -> Result<()> {
    let named = model.params.named();
    let header = CheckpointHeader {
        version: VERSION,
        config: model.config.clone(),
        tags: model.tags(),
        num_nodes: model.num_nodes(),
        in_dim: model.in_dim(),
        num_classes: model.num_classes(),
        tensors: named
            .iter()
            .map(|(n, t)| TensorEntry {
                name: n.clone(),
                shape: t.shape().to_vec(),
            })
            .collect(),
        extra,
    };
    let json = serde_json::to_vec(&header)?;
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(json.len() as u64).to_le_bytes())?;
    w.write_all(&json)?;
    for (_, t) in &named {
        for v in t.iter() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads a checkpoint into `model`, whose configuration, snapshots and
/// dimensions must match the stored ones.
pub fn load_checkpoint(model: &mut Model, path: &Path) -> Result<CheckpointHeader> {
    let bad = |m: &str| Error::Checkpoint(format!("{}: {m}", path.display()));
    let mut r = std::io::BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| bad("truncated"))?;
    if &magic != MAGIC {
        return Err(bad("not a checkpoint file"));
    }
    let mut len = [0u8; 8];
    r.read_exact(&mut len).map_err(|_| bad("truncated"))?;
    let mut json = vec![0u8; u64::from_le_bytes(len) as usize];
    r.read_exact(&mut json).map_err(|_| bad("truncated header"))?;
    let header: CheckpointHeader = serde_json::from_slice(&json)?;
    if header.version != VERSION {
        return Err(bad(&format!("unsupported version {}", header.version)));
    }
    if header.config != model.config
        || header.tags != model.tags()
        || header.num_nodes != model.num_nodes()
        || header.in_dim != model.in_dim()
        || header.num_classes != model.num_classes()
    {
        return Err(bad("model configuration differs from the stored one"));
    }
    let mut params = model.params.clone();
    {
        let mut named = params.named_mut();
        if named.len() != header.tensors.len() {
            return Err(bad("tensor count differs"));
        }
        for ((name, t), entry) in named.iter_mut().zip(&header.tensors) {
            if *name != entry.name || t.shape() != entry.shape.as_slice() {
                return Err(bad(&format!("tensor `{}` does not match `{name}`", entry.name)));
            }
            let mut buf = [0u8; 8];
            for v in t.iter_mut() {
                r.read_exact(&mut buf).map_err(|_| bad("truncated tensor data"))?;
                *v = f64::from_le_bytes(buf);
            }
        }
    }
    if r.read(&mut [0u8; 1])? != 0 {
        return Err(bad("trailing bytes"));
    }
    model.set_params(params)?;
    Ok(header)
}
