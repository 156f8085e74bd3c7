//! Synthetic planted-evidence task generator. Every surface form is a random
//! token, so lexical features carry no signal; when planting is on, the only
//! way to find the answer is the designated "evidence" relation connecting
//! both question concepts to the answer candidate. Distractors get "noise"
//! edges of the same shape. With planting off, every candidate (answer
//! included) gets only noise edges, making candidates indistinguishable.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::ground::ground;
use crate::paths::build_feature_set;
use crate::ptm::PtmScoreRecord;

use super::dataset::DatasetExample;

pub const EVIDENCE_RELATION: &str = "evidence";
pub const NOISE_RELATION: &str = "noise";
pub const FILLER_RELATION: &str = "filler";

/// What score file to emit alongside the data, if any.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ScoresMode {
    /// No score file (pair with kg-only mode).
    None,
    /// Uniform scores in [-1, 1): uninformative but tie-breaking.
    Random,
    /// The answer scores 2.0, everything else 0.0.
    Oracle,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSpec {
    pub n_train: usize,
    pub n_dev: usize,
    pub n_candidates: usize,
    /// Extra connected background nodes (0 disables; 1 cannot materialize
    /// because isolated nodes never appear in edges).
    pub n_background: usize,
    /// When false, the answer gets noise edges like everyone else.
    pub planted: bool,
    pub seed: u64,
    pub scores: ScoresMode,
}

impl Default for SynthSpec {
    fn default() -> SynthSpec {
        SynthSpec {
            n_train: 500,
            n_dev: 200,
            n_candidates: 4,
            n_background: 0,
            planted: true,
            seed: 13,
            scores: ScoresMode::None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthData {
    pub graph_tsv: String,
    pub train: Vec<DatasetExample>,
    pub dev: Vec<DatasetExample>,
    pub scores: Option<Vec<PtmScoreRecord>>,
}

/// A fresh 8-letter token never produced before.
fn fresh_token(rng: &mut ChaCha20Rng, used: &mut BTreeSet<String>) -> String {
    loop {
        let token: String =
            (0..8).map(|_| char::from(b'a' + rng.gen_range(0..26u8))).collect();
        if used.insert(token.clone()) {
            return token;
        }
    }
}

pub fn generate(spec: &SynthSpec) -> Result<SynthData> {
    if spec.n_train + spec.n_dev == 0 {
        return Err(Error::Invalid("need at least one example".into()));
    }
    if spec.n_candidates < 2 {
        return Err(Error::Invalid(format!(
            "need at least 2 candidates, got {}",
            spec.n_candidates
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let mut used = BTreeSet::new();
    let mut graph_tsv = String::new();
    let mut examples = Vec::new();
    let mut scores = Vec::new();

    for i in 0..spec.n_train + spec.n_dev {
        let q1 = fresh_token(&mut rng, &mut used);
        let q2 = fresh_token(&mut rng, &mut used);
        let candidates: Vec<String> =
            (0..spec.n_candidates).map(|_| fresh_token(&mut rng, &mut used)).collect();
        let answer = rng.gen_range(0..spec.n_candidates);
        for (ci, cand) in candidates.iter().enumerate() {
            let rel = if spec.planted && ci == answer { EVIDENCE_RELATION } else { NOISE_RELATION };
            graph_tsv.push_str(&format!("{rel}\t{q1}\t{cand}\n"));
            graph_tsv.push_str(&format!("{rel}\t{q2}\t{cand}\n"));
        }
        let id = format!("synth-{i:04}");
        match spec.scores {
            ScoresMode::None => {}
            ScoresMode::Random => scores.push(PtmScoreRecord {
                id: id.clone(),
                scores: (0..spec.n_candidates).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            }),
            ScoresMode::Oracle => scores.push(PtmScoreRecord {
                id: id.clone(),
                scores: (0..spec.n_candidates)
                    .map(|ci| if ci == answer { 2.0 } else { 0.0 })
                    .collect(),
            }),
        }
        examples.push(DatasetExample {
            id,
            question: format!("{q1} {q2}"),
            candidates,
            answer_index: Some(answer),
        });
    }

    // Optional background clutter: a random tree over extra nodes, reachable
    // from nothing the questions touch.
    let mut background = Vec::with_capacity(spec.n_background);
    for j in 0..spec.n_background {
        background.push(fresh_token(&mut rng, &mut used));
        if j > 0 {
            let target = rng.gen_range(0..j);
            graph_tsv
                .push_str(&format!("{FILLER_RELATION}\t{}\t{}\n", background[j], background[target]));
        }
    }

    let dev = examples.split_off(spec.n_train);
    Ok(SynthData {
        graph_tsv,
        train: examples,
        dev,
        scores: if spec.scores == ScoresMode::None { None } else { Some(scores) },
    })
}

/// Re-extracts features and confirms the construction: with planting, each
/// answer has evidence paths and no distractor does; without, the evidence
/// relation must not exist and all candidates of an example must have
/// identical feature sets.
pub fn verify_planting(
    graph: &Graph,
    examples: &[DatasetExample],
    k: usize,
    path_cap: usize,
    planted: bool,
) -> Result<()> {
    let evidence = graph.lookup_relation(EVIDENCE_RELATION);
    if planted && evidence.is_none() {
        return Err(Error::Invalid("planted graph lacks the evidence relation".into()));
    }
    if !planted && evidence.is_some() {
        return Err(Error::Invalid("control graph contains the evidence relation".into()));
    }
    for ex in examples {
        let answer = ex.answer_index.ok_or_else(|| {
            Error::Invalid(format!("synthetic example '{}' lost its answer", ex.id))
        })?;
        let grounded = ground(graph, &ex.id, &ex.question, &ex.candidates, ex.answer_index)?;
        let mut first_entries = None;
        for (ci, vc) in grounded.candidate_concepts.iter().enumerate() {
            let pair_id =
                crate::ground::PairId { example_id: ex.id.clone(), candidate_index: ci };
            let fs = build_feature_set(
                graph,
                pair_id,
                &grounded.question_concepts,
                vc,
                k,
                path_cap,
            )?;
            if fs.is_empty() {
                return Err(Error::Invalid(format!(
                    "candidate {ci} of '{}' has no paths at all",
                    ex.id
                )));
            }
            if planted {
                let has_evidence = fs
                    .entries
                    .keys()
                    .any(|p| p.relations.iter().any(|r| Some(*r) == evidence));
                if has_evidence != (ci == answer) {
                    return Err(Error::Invalid(format!(
                        "candidate {ci} of '{}' {} evidence paths",
                        ex.id,
                        if has_evidence { "unexpectedly has" } else { "is missing" }
                    )));
                }
            } else {
                match &first_entries {
                    None => first_entries = Some(fs.entries.clone()),
                    Some(first) => {
                        if first != &fs.entries {
                            return Err(Error::Invalid(format!(
                                "control candidates of '{}' are distinguishable",
                                ex.id
                            )));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}
