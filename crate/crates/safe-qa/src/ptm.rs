//! Per-candidate text-model scores: loaded from a score file, or produced
//! by a small built-in lexical scorer so experiments can run fully
//! self-contained.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ConceptId;
use crate::ground::tokenize;
use crate::nn::mlp::{MlpBlock, MlpCache, MlpGrads};

/// One line of a score file: raw pre-softmax logits, one per candidate in
/// dataset order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PtmScoreRecord {
    pub id: String,
    pub scores: Vec<f64>,
}

/// What to do when an example has no score record.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MissingScorePolicy {
    /// Fail the run (default).
    Error,
    /// Use all-zero scores and keep going.
    ZeroFill,
}

/// Loads a score file (one JSON record per line). Duplicate ids and
/// non-finite scores are rejected.
pub fn load_scores(path: impl AsRef<Path>) -> Result<BTreeMap<String, Vec<f64>>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: PtmScoreRecord = serde_json::from_str(line)
            .map_err(|e| Error::parse(path, lineno + 1, e.to_string()))?;
        if rec.scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite {
                what: "text-model score".into(),
                example_ids: vec![rec.id],
            });
        }
        if map.insert(rec.id.clone(), rec.scores).is_some() {
            return Err(Error::DuplicateId(rec.id));
        }
    }
    Ok(map)
}

/// Writes records as one JSON object per line, in the given order.
pub fn save_scores(path: impl AsRef<Path>, records: &[PtmScoreRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for rec in records {
        out.push_str(
            &serde_json::to_string(rec)
                .map_err(|e| Error::Invalid(format!("score serialization failed: {e}")))?,
        );
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Looks up the scores for one example and validates the candidate count.
pub fn resolve_scores(
    map: &BTreeMap<String, Vec<f64>>,
    id: &str,
    n_candidates: usize,
    policy: MissingScorePolicy,
) -> Result<Vec<f64>> {
    match map.get(id) {
        Some(scores) if scores.len() == n_candidates => Ok(scores.clone()),
        Some(scores) => Err(Error::ScoreJoin {
            id: id.to_string(),
            msg: format!("{} scores for {n_candidates} candidates", scores.len()),
        }),
        None => match policy {
            MissingScorePolicy::Error => Err(Error::ScoreJoin {
                id: id.to_string(),
                msg: "no score record".into(),
            }),
            MissingScorePolicy::ZeroFill => Ok(vec![0.0; n_candidates]),
        },
    }
}

/// Number of hand-crafted lexical features.
pub const TOY_FEATURES: usize = 3;

/// Lexical features for one question–candidate pair:
/// distinct shared tokens, candidate/question token-length ratio, and
/// shared grounded concepts.
pub fn lexical_features(
    question_text: &str,
    candidate_text: &str,
    vq: &BTreeSet<ConceptId>,
    vc: &BTreeSet<ConceptId>,
) -> [f64; TOY_FEATURES] {
    let q_tokens: BTreeSet<String> = tokenize(question_text).into_iter().collect();
    let c_tokens: BTreeSet<String> = tokenize(candidate_text).into_iter().collect();
    let overlap = q_tokens.intersection(&c_tokens).count() as f64;
    let ratio = c_tokens.len() as f64 / q_tokens.len().max(1) as f64;
    let shared_concepts = vq.intersection(vc).count() as f64;
    [overlap, ratio, shared_concepts]
}

/// Trainable stand-in for a text model: elementwise feature scaling
/// followed by a two-layer head, `y = head(w ∘ features)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ToyScorer {
    pub feature_weights: Vec<f64>,
    pub head: MlpBlock,
}

/// Forward intermediates for `ToyScorer::backward`.
#[derive(Clone, Debug)]
pub struct ToyCache {
    features: [f64; TOY_FEATURES],
    head_cache: MlpCache,
}

impl ToyCache {
    /// Hidden preactivations of the head (used for ReLU-kink monitoring).
    pub fn head_z1(&self) -> &[f64] {
        &self.head_cache.z1
    }
}

/// Gradients for all toy-scorer parameters.
#[derive(Clone, Debug)]
pub struct ToyGrads {
    pub d_feature_weights: Vec<f64>,
    pub d_head: MlpGrads,
}

impl ToyGrads {
    pub fn zeros(scorer: &ToyScorer) -> ToyGrads {
        ToyGrads {
            d_feature_weights: vec![0.0; TOY_FEATURES],
            d_head: MlpGrads::zeros(&scorer.head),
        }
    }

    pub fn accumulate(&mut self, other: &ToyGrads) {
        for (a, b) in self.d_feature_weights.iter_mut().zip(&other.d_feature_weights) {
            *a += b;
        }
        self.d_head.accumulate(&other.d_head);
    }
}

impl ToyScorer {
    pub fn zeros(hidden: usize) -> ToyScorer {
        ToyScorer {
            feature_weights: vec![0.0; TOY_FEATURES],
            head: MlpBlock::zeros(TOY_FEATURES, hidden, 1),
        }
    }

    /// Neutral feature scaling (all ones) and a randomly initialized head.
    pub fn init(hidden: usize, rng: &mut impl Rng) -> ToyScorer {
        ToyScorer {
            feature_weights: vec![1.0; TOY_FEATURES],
            head: MlpBlock::init(TOY_FEATURES, hidden, 1, rng),
        }
    }

    pub fn param_count(&self) -> usize {
        TOY_FEATURES + self.head.param_count()
    }

    pub fn score(&self, features: [f64; TOY_FEATURES]) -> Result<(f64, ToyCache)> {
        let scaled: Vec<f64> = features
            .iter()
            .zip(&self.feature_weights)
            .map(|(f, w)| f * w)
            .collect();
        let (y, head_cache) = self.head.forward(&scaled)?;
        Ok((y[0], ToyCache { features, head_cache }))
    }

    pub fn backward(&self, cache: &ToyCache, dy: f64) -> Result<ToyGrads> {
        let d_head = self.head.backward(&cache.head_cache, &[dy])?;
        let d_feature_weights = cache
            .features
            .iter()
            .zip(&d_head.dx)
            .map(|(f, dx)| f * dx)
            .collect();
        Ok(ToyGrads { d_feature_weights, d_head })
    }
}
