//! Self-describing checkpoint container: named f64 tensors with shapes,
//! plus the seed, config hash, and free-form metadata of the producing run.
//!
//! Serialized as JSON; f64 values round-trip exactly through the shortest
//! decimal representation, so save → load is bit-faithful.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CHECKPOINT_VERSION: u32 = 1;

/// One parameter tensor. `data` is row-major and `shape` must multiply out
/// to `data.len()`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedTensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl NamedTensor {
    pub fn vector(name: &str, data: Vec<f64>) -> NamedTensor {
        NamedTensor { name: name.to_string(), shape: vec![data.len()], data }
    }

    pub fn matrix(name: &str, rows: usize, cols: usize, data: Vec<f64>) -> NamedTensor {
        NamedTensor { name: name.to_string(), shape: vec![rows, cols], data }
    }
}

/// A saved parameter set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub seed: u64,
    pub config_hash: String,
    /// Run provenance: graph hash, mode, full run configuration, etc.
    pub metadata: BTreeMap<String, serde_json::Value>,
    pub tensors: Vec<NamedTensor>,
}

impl Checkpoint {
    pub fn new(seed: u64, config_hash: &str) -> Checkpoint {
        Checkpoint {
            version: CHECKPOINT_VERSION,
            seed,
            config_hash: config_hash.to_string(),
            metadata: BTreeMap::new(),
            tensors: Vec::new(),
        }
    }

    pub fn push(&mut self, tensor: NamedTensor) {
        self.tensors.push(tensor);
    }

    pub fn tensor(&self, name: &str) -> Result<&NamedTensor> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .ok_or_else(|| Error::Incompatible(format!("checkpoint is missing tensor {name:?}")))
    }

    pub fn meta_str(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).and_then(|v| v.as_str())
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Incompatible(format!(
                "checkpoint version {} unsupported (expected {CHECKPOINT_VERSION})",
                self.version
            )));
        }
        for t in &self.tensors {
            let expected: usize = t.shape.iter().product();
            if expected != t.data.len() {
                return Err(Error::Dimension {
                    what: format!("checkpoint tensor {:?}", t.name),
                    expected,
                    got: t.data.len(),
                });
            }
            if t.data.iter().any(|v| !v.is_finite()) {
                return Err(Error::Invalid(format!(
                    "checkpoint tensor {:?} contains non-finite values",
                    t.name
                )));
            }
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        self.validate()?;
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Invalid(format!("checkpoint serialization failed: {e}")))?;
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Checkpoint> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Checkpoint = serde_json::from_str(&text)
            .map_err(|e| Error::parse(path, e.line(), e.to_string()))?;
        ckpt.validate()?;
        Ok(ckpt)
    }
}
