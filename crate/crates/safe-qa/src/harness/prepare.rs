//! Turns raw inputs (graph, dataset, optional score file) into the in-memory
//! form the trainer and evaluator consume: per-candidate path features plus
//! base text scores and, in toy-scorer mode, lexical features.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::ground::ground;
use crate::harness::config::{Mode, RunConfig};
use crate::paths::{build_feature_set, PathFeatureSet};
use crate::ptm::{lexical_features, resolve_scores, TOY_FEATURES};

use super::dataset::DatasetExample;

/// One example ready for scoring: everything downstream is derived from this.
#[derive(Clone, Debug, PartialEq)]
pub struct PreparedExample {
    pub id: String,
    pub answer_index: Option<usize>,
    /// Text-model score per candidate; zeros outside score-file mode.
    pub base_scores: Vec<f64>,
    /// Lexical features per candidate; `Some` only in toy-scorer mode.
    pub toy_features: Option<Vec<[f64; TOY_FEATURES]>>,
    /// Path features per candidate, in candidate order.
    pub feature_sets: Vec<PathFeatureSet>,
}

impl PreparedExample {
    pub fn n_candidates(&self) -> usize {
        self.feature_sets.len()
    }

    pub fn any_truncated(&self) -> bool {
        self.feature_sets.iter().any(|fs| fs.truncated)
    }
}

/// Extracts path features for every (example, candidate) pair, in example
/// order with candidates in order within each example. This flat order is the
/// cache serialization order.
pub fn extract_features(
    graph: &Graph,
    dataset: &[DatasetExample],
    k: usize,
    path_cap: usize,
) -> Result<Vec<PathFeatureSet>> {
    let mut out = Vec::new();
    for ex in dataset {
        let grounded = ground(graph, &ex.id, &ex.question, &ex.candidates, ex.answer_index)?;
        for (ci, vc) in grounded.candidate_concepts.iter().enumerate() {
            let pair_id = crate::ground::PairId { example_id: ex.id.clone(), candidate_index: ci };
            out.push(build_feature_set(
                graph,
                pair_id,
                &grounded.question_concepts,
                vc,
                k,
                path_cap,
            )?);
        }
    }
    Ok(out)
}

/// Assembles prepared examples from a dataset and pre-extracted features
/// (fresh or from a cache; both produce identical results).
///
/// `scores` must be `Some` exactly in score-file mode.
pub fn prepare_examples(
    graph: &Graph,
    dataset: &[DatasetExample],
    features: Vec<PathFeatureSet>,
    config: &RunConfig,
    scores: Option<&BTreeMap<String, Vec<f64>>>,
) -> Result<Vec<PreparedExample>> {
    if (config.mode == Mode::ScoreFile) != scores.is_some() {
        return Err(Error::Invalid(format!(
            "mode {:?} {} a score table",
            config.mode,
            if scores.is_some() { "does not take" } else { "requires" }
        )));
    }
    let total: usize = dataset.iter().map(|ex| ex.candidates.len()).sum();
    if features.len() != total {
        return Err(Error::Incompatible(format!(
            "feature count {} does not match dataset pair count {total}",
            features.len()
        )));
    }

    let mut out = Vec::with_capacity(dataset.len());
    let mut feat_iter = features.into_iter();
    for ex in dataset {
        let n = ex.candidates.len();
        let mut feature_sets = Vec::with_capacity(n);
        for ci in 0..n {
            let fs = feat_iter.next().expect("count checked above");
            if fs.pair_id.example_id != ex.id || fs.pair_id.candidate_index != ci {
                return Err(Error::Incompatible(format!(
                    "feature order mismatch: expected ({}, {ci}), found ({}, {})",
                    ex.id, fs.pair_id.example_id, fs.pair_id.candidate_index
                )));
            }
            feature_sets.push(fs);
        }

        let base_scores = match scores {
            Some(map) => resolve_scores(map, &ex.id, n, config.missing_score_policy)?,
            None => vec![0.0; n],
        };

        let toy_features = if config.mode == Mode::ToyScorer {
            let grounded = ground(graph, &ex.id, &ex.question, &ex.candidates, ex.answer_index)?;
            Some(
                ex.candidates
                    .iter()
                    .enumerate()
                    .map(|(ci, cand)| {
                        lexical_features(
                            &ex.question,
                            cand,
                            &grounded.question_concepts,
                            &grounded.candidate_concepts[ci],
                        )
                    })
                    .collect(),
            )
        } else {
            None
        };

        out.push(PreparedExample {
            id: ex.id.clone(),
            answer_index: ex.answer_index,
            base_scores,
            toy_features,
            feature_sets,
        });
    }
    Ok(out)
}

/// Convenience: extract features and prepare in one step.
pub fn prepare_fresh(
    graph: &Graph,
    dataset: &[DatasetExample],
    config: &RunConfig,
    scores: Option<&BTreeMap<String, Vec<f64>>>,
) -> Result<Vec<PreparedExample>> {
    let features = extract_features(graph, dataset, config.k, config.path_cap)?;
    prepare_examples(graph, dataset, features, config, scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    fn toy_graph() -> Graph {
        let tsv = "desire\tpeople\tdrink_water\n\
                   related_to\tdrink_water\twater\n\
                   at_location\twater\tlake\n\
                   at_location\tdesk\toffice\n";
        Graph::from_tsv_str(tsv, true, "test").unwrap()
    }

    fn toy_dataset() -> Vec<DatasetExample> {
        vec![DatasetExample {
            id: "q1".into(),
            question: "where do people drink water".into(),
            candidates: vec!["lake".into(), "desk".into()],
            answer_index: Some(0),
        }]
    }

    #[test]
    fn fresh_preparation_assembles_pairs_in_order() {
        let g = toy_graph();
        let ds = toy_dataset();
        let mut cfg = RunConfig::default();
        cfg.mode = Mode::KgOnly;
        let prepared = prepare_fresh(&g, &ds, &cfg, None).unwrap();
        assert_eq!(prepared.len(), 1);
        let ex = &prepared[0];
        assert_eq!(ex.n_candidates(), 2);
        assert_eq!(ex.base_scores, vec![0.0, 0.0]);
        assert!(ex.toy_features.is_none());
        assert_eq!(ex.feature_sets[0].pair_id.candidate_index, 0);
        assert_eq!(ex.feature_sets[1].pair_id.candidate_index, 1);
        // water -> lake is a real path; nothing reaches desk.
        assert!(!ex.feature_sets[0].is_empty());
        assert!(ex.feature_sets[1].is_empty());
    }

    #[test]
    fn score_file_mode_joins_scores() {
        let g = toy_graph();
        let ds = toy_dataset();
        let cfg = RunConfig::default();
        let mut scores = BTreeMap::new();
        scores.insert("q1".to_string(), vec![0.5, -0.25]);
        let prepared = prepare_fresh(&g, &ds, &cfg, Some(&scores)).unwrap();
        assert_eq!(prepared[0].base_scores, vec![0.5, -0.25]);
    }

    #[test]
    fn mode_and_scores_must_agree() {
        let g = toy_graph();
        let ds = toy_dataset();
        let cfg = RunConfig::default();
        assert!(prepare_fresh(&g, &ds, &cfg, None).is_err());
        let mut kg = cfg.clone();
        kg.mode = Mode::KgOnly;
        let scores = BTreeMap::new();
        assert!(prepare_fresh(&g, &ds, &kg, Some(&scores)).is_err());
    }

    #[test]
    fn toy_mode_computes_features_per_candidate() {
        let g = toy_graph();
        let ds = toy_dataset();
        let mut cfg = RunConfig::default();
        cfg.mode = Mode::ToyScorer;
        let prepared = prepare_fresh(&g, &ds, &cfg, None).unwrap();
        let feats = prepared[0].toy_features.as_ref().unwrap();
        assert_eq!(feats.len(), 2);
        // "lake" shares no surface token with the question but differs from
        // "desk" in concept overlap only via paths, not lexical features.
        assert!(feats.iter().all(|f| f.iter().all(|v| v.is_finite())));
    }

    #[test]
    fn cached_features_equal_fresh_features() {
        let g = toy_graph();
        let ds = toy_dataset();
        let mut cfg = RunConfig::default();
        cfg.mode = Mode::KgOnly;
        let features = extract_features(&g, &ds, cfg.k, cfg.path_cap).unwrap();

        let key = super::super::cache::CacheKey {
            version: super::super::cache::CACHE_VERSION,
            graph_hash: g.content_hash(),
            dataset_hash: super::super::dataset::dataset_hash(&ds),
            k: cfg.k,
            path_cap: cfg.path_cap,
            augment_inverses: true,
        };
        let file = tempfile::NamedTempFile::new().unwrap();
        super::super::cache::write_cache(file.path(), &key, &features).unwrap();
        let cached = super::super::cache::read_cache(file.path(), &key).unwrap();

        let fresh = prepare_examples(&g, &ds, features, &cfg, None).unwrap();
        let from_cache = prepare_examples(&g, &ds, cached, &cfg, None).unwrap();
        assert_eq!(fresh, from_cache);
    }

    #[test]
    fn shuffled_features_rejected() {
        let g = toy_graph();
        let ds = toy_dataset();
        let mut cfg = RunConfig::default();
        cfg.mode = Mode::KgOnly;
        let mut features = extract_features(&g, &ds, cfg.k, cfg.path_cap).unwrap();
        features.swap(0, 1);
        assert!(prepare_examples(&g, &ds, features, &cfg, None).is_err());
    }
}
