//! End-to-end experiment harness: run configuration, datasets, feature
//! caching, training, evaluation, fraction sweeps, synthetic data, and
//! parameter reports. The CLI is a thin wrapper over this module.

pub mod cache;
pub mod config;
pub mod dataset;
pub mod eval;
pub mod persist;
pub mod prepare;
pub mod report;
pub mod sweep;
pub mod synth;
pub mod train;

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::Result;
use crate::graph::Graph;
use crate::paths::{PathFeatureSet, SimplifiedPath};

pub use cache::{cache_matches, read_cache, write_cache, CacheKey, CACHE_VERSION};
pub use config::{Mode, RunConfig};
pub use dataset::{dataset_hash, dataset_to_jsonl, load_dataset, save_dataset, DatasetExample};
pub use eval::{accuracy_counts, evaluate, format_report, predict, EvalReport, PredictionRow};
pub use persist::{
    check_graph_compatibility, model_from_checkpoint, model_to_checkpoint, LoadedModel,
};
pub use prepare::{extract_features, prepare_examples, prepare_fresh, PreparedExample};
pub use report::{format_param_report, param_report, ParamReport, DEFAULT_N_RELATIONS};
pub use sweep::{format_sweep, fraction_warnings, sweep, SweepRow, SWEEP_SEEDS};
pub use synth::{generate, verify_planting, ScoresMode, SynthData, SynthSpec};
pub use train::{format_log, subsample_indices, train, EpochLog, TrainOutcome};

/// The cache key for this (graph, dataset, config) combination.
pub fn cache_key(graph: &Graph, examples: &[DatasetExample], config: &RunConfig) -> CacheKey {
    CacheKey {
        version: CACHE_VERSION,
        graph_hash: graph.content_hash(),
        dataset_hash: dataset_hash(examples),
        k: config.k,
        path_cap: config.path_cap,
        augment_inverses: graph.augmented(),
    }
}

/// Returns path features for the dataset, reusing `cache_path` when its key
/// matches and rewriting it otherwise. The boolean reports whether the cache
/// was reused. With no cache path, features are extracted fresh.
pub fn load_or_extract_features(
    graph: &Graph,
    examples: &[DatasetExample],
    config: &RunConfig,
    cache_path: Option<&Path>,
) -> Result<(Vec<PathFeatureSet>, bool)> {
    let key = cache_key(graph, examples, config);
    if let Some(path) = cache_path {
        if cache_matches(path, &key) {
            return Ok((read_cache(path, &key)?, true));
        }
    }
    let features = extract_features(graph, examples, config.k, config.path_cap)?;
    if let Some(path) = cache_path {
        write_cache(path, &key, &features)?;
    }
    Ok((features, false))
}

/// Every distinct simplified path observed across the given examples; the
/// row set of a path-value table.
pub fn collect_vocabulary(examples: &[PreparedExample]) -> BTreeSet<SimplifiedPath> {
    let mut vocab = BTreeSet::new();
    for ex in examples {
        for fs in &ex.feature_sets {
            for p in fs.entries.keys() {
                vocab.insert(p.clone());
            }
        }
    }
    vocab
}
