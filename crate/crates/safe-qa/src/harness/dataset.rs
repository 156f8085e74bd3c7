//! JSONL question-answering datasets: one example per line with a unique id,
//! question text, candidate answers, and an optional gold index.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetExample {
    pub id: String,
    pub question: String,
    pub candidates: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_index: Option<usize>,
}

fn validate_example(ex: &DatasetExample, path: &Path, line: usize) -> Result<()> {
    if ex.candidates.len() < 2 {
        return Err(Error::parse(
            path,
            line,
            format!("example '{}' needs at least 2 candidates, got {}", ex.id, ex.candidates.len()),
        ));
    }
    if let Some(ans) = ex.answer_index {
        if ans >= ex.candidates.len() {
            return Err(Error::parse(
                path,
                line,
                format!(
                    "example '{}' answer_index {ans} out of range for {} candidates",
                    ex.id,
                    ex.candidates.len()
                ),
            ));
        }
    }
    Ok(())
}

/// Loads a JSONL dataset. Blank lines are skipped; ids must be unique.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<DatasetExample>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let ex: DatasetExample =
            serde_json::from_str(raw).map_err(|e| Error::parse(path, line, e.to_string()))?;
        validate_example(&ex, path, line)?;
        if !seen.insert(ex.id.clone()) {
            return Err(Error::DuplicateId(ex.id));
        }
        out.push(ex);
    }
    Ok(out)
}

/// Canonical JSONL serialization: one compact JSON object per line, in order.
pub fn dataset_to_jsonl(examples: &[DatasetExample]) -> String {
    let mut out = String::new();
    for ex in examples {
        out.push_str(&serde_json::to_string(ex).expect("example serializes"));
        out.push('\n');
    }
    out
}

pub fn save_dataset(path: impl AsRef<Path>, examples: &[DatasetExample]) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, dataset_to_jsonl(examples)).map_err(|e| Error::io(path, e))
}

/// First 16 hex chars of the SHA-256 of the canonical serialization; used to
/// key feature caches.
pub fn dataset_hash(examples: &[DatasetExample]) -> String {
    let digest = Sha256::digest(dataset_to_jsonl(examples).as_bytes());
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}
