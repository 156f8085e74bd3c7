//! On-disk cache of extracted path features, keyed by the inputs that
//! determine them: graph content, dataset content, hop limit, path cap, and
//! inverse augmentation. A matching cache is reused byte-for-byte; any key
//! mismatch forces recomputation.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::RelationId;
use crate::ground::PairId;
use crate::paths::{NodeRole, PathFeatureSet, SimplifiedPath};

pub const CACHE_VERSION: u32 = 1;

/// Everything the cached features depend on.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CacheKey {
    pub version: u32,
    pub graph_hash: String,
    pub dataset_hash: String,
    pub k: usize,
    pub path_cap: usize,
    pub augment_inverses: bool,
}

#[derive(Serialize, Deserialize)]
struct PathRecord {
    roles: Vec<u8>,
    relations: Vec<u32>,
    frequency: u64,
}

#[derive(Serialize, Deserialize)]
struct PairRecord {
    example_id: String,
    candidate_index: usize,
    truncated: bool,
    paths: Vec<PathRecord>,
}

fn pair_to_record(fs: &PathFeatureSet) -> PairRecord {
    PairRecord {
        example_id: fs.pair_id.example_id.clone(),
        candidate_index: fs.pair_id.candidate_index,
        truncated: fs.truncated,
        paths: fs
            .entries
            .iter()
            .map(|(p, &f)| PathRecord {
                roles: p.roles.iter().map(|r| r.as_u8()).collect(),
                relations: p.relations.iter().map(|r| r.0).collect(),
                frequency: f,
            })
            .collect(),
    }
}

fn record_to_pair(rec: PairRecord) -> Result<PathFeatureSet> {
    let pair_id =
        PairId { example_id: rec.example_id, candidate_index: rec.candidate_index };
    let mut entries = Vec::with_capacity(rec.paths.len());
    for p in rec.paths {
        let roles =
            p.roles.into_iter().map(NodeRole::from_u8).collect::<Result<Vec<_>>>()?;
        let relations = p.relations.into_iter().map(RelationId).collect();
        entries.push((SimplifiedPath { roles, relations }, p.frequency));
    }
    Ok(PathFeatureSet::from_entries(pair_id, entries, rec.truncated))
}

/// Serializes a cache: one JSON header line, then one line per pair in input
/// order. The same inputs always produce the same bytes.
pub fn cache_to_string(key: &CacheKey, features: &[PathFeatureSet]) -> String {
    let mut out = serde_json::to_string(key).expect("key serializes");
    out.push('\n');
    for fs in features {
        out.push_str(&serde_json::to_string(&pair_to_record(fs)).expect("record serializes"));
        out.push('\n');
    }
    out
}

pub fn write_cache(
    path: impl AsRef<Path>,
    key: &CacheKey,
    features: &[PathFeatureSet],
) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, cache_to_string(key, features)).map_err(|e| Error::io(path, e))
}

/// Reads just the header; `Ok(key)` even if the body is unread.
pub fn read_cache_key(path: impl AsRef<Path>) -> Result<CacheKey> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let header = text.lines().next().unwrap_or("");
    serde_json::from_str(header).map_err(|e| Error::parse(path, 1, e.to_string()))
}

/// True when `path` exists and its header equals `key` exactly.
pub fn cache_matches(path: impl AsRef<Path>, key: &CacheKey) -> bool {
    matches!(read_cache_key(path), Ok(found) if &found == key)
}

/// Loads a cache, refusing one whose key differs from `expected`.
pub fn read_cache(path: impl AsRef<Path>, expected: &CacheKey) -> Result<Vec<PathFeatureSet>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty cache file".to_string()))?;
    let key: CacheKey =
        serde_json::from_str(header).map_err(|e| Error::parse(path, 1, e.to_string()))?;
    if &key != expected {
        return Err(Error::Incompatible(format!(
            "cache key mismatch: file has {key:?}, expected {expected:?}"
        )));
    }
    let mut out = Vec::new();
    for (idx, raw) in lines {
        if raw.trim().is_empty() {
            continue;
        }
        let rec: PairRecord = serde_json::from_str(raw)
            .map_err(|e| Error::parse(path, idx + 1, e.to_string()))?;
        out.push(record_to_pair(rec)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::RelationId;
    use crate::paths::NodeRole::{Answer, Other, Question};

    fn sample_features() -> Vec<PathFeatureSet> {
        let p1 = SimplifiedPath {
            roles: vec![Question, Other, Answer],
            relations: vec![RelationId(0), RelationId(3)],
        };
        let p2 = SimplifiedPath { roles: vec![Question, Answer], relations: vec![RelationId(1)] };
        vec![
            PathFeatureSet::from_entries(
                PairId { example_id: "q1".into(), candidate_index: 0 },
                vec![(p1, 2), (p2.clone(), 5)],
                false,
            ),
            PathFeatureSet::from_entries(
                PairId { example_id: "q1".into(), candidate_index: 1 },
                vec![(p2, 1)],
                true,
            ),
        ]
    }

    fn sample_key() -> CacheKey {
        CacheKey {
            version: CACHE_VERSION,
            graph_hash: "aaaa".into(),
            dataset_hash: "bbbb".into(),
            k: 2,
            path_cap: 1_000_000,
            augment_inverses: true,
        }
    }

    #[test]
    fn roundtrip_preserves_features_exactly() {
        let file = tempfile::NamedTempFile::new().unwrap();
        let features = sample_features();
        let key = sample_key();
        write_cache(file.path(), &key, &features).unwrap();
        assert!(cache_matches(file.path(), &key));
        let back = read_cache(file.path(), &key).unwrap();
        assert_eq!(features, back);
    }

    #[test]
    fn rewrite_is_byte_identical() {
        let features = sample_features();
        let key = sample_key();
        assert_eq!(cache_to_string(&key, &features), cache_to_string(&key, &features));
    }

    #[test]
    fn key_mismatch_refused() {
        let file = tempfile::NamedTempFile::new().unwrap();
        let key = sample_key();
        write_cache(file.path(), &key, &sample_features()).unwrap();
        let mut other = key.clone();
        other.k = 3;
        assert!(!cache_matches(file.path(), &other));
        match read_cache(file.path(), &other) {
            Err(Error::Incompatible(_)) => {}
            other => panic!("expected Incompatible, got {other:?}"),
        }
    }

    #[test]
    fn corrupt_body_reports_line() {
        let file = tempfile::NamedTempFile::new().unwrap();
        let key = sample_key();
        let mut text = cache_to_string(&key, &sample_features());
        text.push_str("not json\n");
        fs::write(file.path(), text).unwrap();
        match read_cache(file.path(), &key) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected Parse, got {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_not_a_match() {
        assert!(!cache_matches("/nonexistent/cache.jsonl", &sample_key()));
    }
}
