//! Concept grounding: link question/candidate text to graph concepts and
//! build the per-pair evidence subgraph.
//!
//! Matching is exact n-gram lookup (n ≤ 4) over canonicalized tokens; all
//! matches are kept (a longer match does not suppress its sub-spans), and
//! stopwords are excluded as single-token matches only.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{ConceptId, Edge, Graph, RelationId};
use crate::paths;

/// Longest token n-gram considered during concept matching.
pub const MAX_NGRAM: usize = 4;

/// Sorted list of tokens excluded as 1-gram matches. Must stay sorted:
/// lookups use binary search.
const STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "all", "am", "an", "and", "any",
    "are", "as", "at", "be", "because", "been", "before", "being", "below",
    "between", "both", "but", "by", "can", "could", "did", "do", "does",
    "doing", "down", "during", "each", "few", "for", "from", "further", "had",
    "has", "have", "having", "he", "her", "here", "hers", "him", "his", "how",
    "i", "if", "in", "into", "is", "it", "its", "just", "me", "more", "most",
    "my", "no", "nor", "not", "of", "off", "on", "once", "only", "or",
    "other", "our", "ours", "out", "over", "own", "s", "same", "she",
    "should", "so", "some", "such", "t", "than", "that", "the", "their",
    "theirs", "them", "then", "there", "these", "they", "this", "those",
    "through", "to", "too", "under", "until", "up", "very", "was", "we",
    "were", "what", "when", "where", "which", "while", "who", "whom", "why",
    "will", "with", "would", "you", "your", "yours",
];

fn is_stopword(token: &str) -> bool {
    STOPWORDS.binary_search(&token).is_ok()
}

/// Lowercase alphanumeric tokens of `text`, in order.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// All graph concepts whose canonical surface equals some token n-gram
/// (n ≤ 4) of `text`, with stopwords skipped as 1-grams.
pub fn match_concepts(g: &Graph, text: &str) -> BTreeSet<ConceptId> {
    let tokens = tokenize(text);
    let mut out = BTreeSet::new();
    for n in 1..=MAX_NGRAM.min(tokens.len()) {
        for window in tokens.windows(n) {
            if n == 1 && is_stopword(&window[0]) {
                continue;
            }
            let surface = window.join("_");
            if let Some(id) = g.lookup_concept(&surface) {
                out.insert(id);
            }
        }
    }
    out
}

/// Identifies one question–candidate pair.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PairId {
    pub example_id: String,
    pub candidate_index: usize,
}

/// A question with its candidates, linked to graph concepts.
#[derive(Clone, Debug)]
pub struct GroundedExample {
    pub example_id: String,
    pub question_text: String,
    pub candidates: Vec<String>,
    pub answer_index: Option<usize>,
    /// V_q: concepts mentioned by the question.
    pub question_concepts: BTreeSet<ConceptId>,
    /// V_c per candidate; a concept mentioned by both question and candidate
    /// appears in both sets.
    pub candidate_concepts: Vec<BTreeSet<ConceptId>>,
}

/// Links an example's texts to graph concepts. Empty concept sets are
/// allowed and simply produce empty path sets downstream.
pub fn ground(
    g: &Graph,
    example_id: &str,
    question_text: &str,
    candidates: &[String],
    answer_index: Option<usize>,
) -> Result<GroundedExample> {
    if candidates.len() < 2 {
        return Err(Error::Invalid(format!(
            "example {example_id:?} needs at least 2 candidates, got {}",
            candidates.len()
        )));
    }
    if let Some(ai) = answer_index {
        if ai >= candidates.len() {
            return Err(Error::Invalid(format!(
                "example {example_id:?} answer_index {ai} out of range for {} candidates",
                candidates.len()
            )));
        }
    }
    let question_concepts = match_concepts(g, question_text);
    let candidate_concepts = candidates.iter().map(|c| match_concepts(g, c)).collect();
    Ok(GroundedExample {
        example_id: example_id.to_string(),
        question_text: question_text.to_string(),
        candidates: candidates.to_vec(),
        answer_index,
        question_concepts,
        candidate_concepts,
    })
}

/// Evidence subgraph for one question–candidate pair: exactly the nodes
/// lying on some ≤k-hop simple question→candidate path, plus both seed
/// sets, with every graph edge between retained nodes.
#[derive(Clone, Debug)]
pub struct Subgraph {
    pub pair_id: PairId,
    nodes: BTreeSet<ConceptId>,
    edges: BTreeSet<Edge>,
    adjacency: Vec<(ConceptId, Vec<(RelationId, ConceptId)>)>,
}

impl Subgraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &BTreeSet<ConceptId> {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<Edge> {
        &self.edges
    }

    pub fn contains_node(&self, v: ConceptId) -> bool {
        self.nodes.contains(&v)
    }

    /// Outgoing `(relation, neighbor)` pairs within the subgraph, sorted.
    pub fn neighbors(&self, v: ConceptId) -> &[(RelationId, ConceptId)] {
        match self.adjacency.binary_search_by_key(&v, |(node, _)| *node) {
            Ok(i) => &self.adjacency[i].1,
            Err(_) => &[],
        }
    }
}

/// Builds the evidence subgraph for `ex`'s candidate `candidate_index`.
pub fn build_subgraph(
    g: &Graph,
    ex: &GroundedExample,
    candidate_index: usize,
    k: usize,
) -> Result<Subgraph> {
    if k < 1 {
        return Err(Error::Invalid("hop limit k must be at least 1".into()));
    }
    let vc = ex
        .candidate_concepts
        .get(candidate_index)
        .ok_or_else(|| {
            Error::Invalid(format!(
                "candidate index {candidate_index} out of range for example {:?}",
                ex.example_id
            ))
        })?;
    let vq = &ex.question_concepts;

    let mut nodes = paths::collect_path_nodes(g, vq, vc, k)?;
    nodes.extend(vq.iter().copied());
    nodes.extend(vc.iter().copied());

    let mut edges = BTreeSet::new();
    let mut adjacency: Vec<(ConceptId, Vec<(RelationId, ConceptId)>)> =
        nodes.iter().map(|&v| (v, Vec::new())).collect();
    for &v in &nodes {
        for &(rel, to) in g.neighbors(v)? {
            if nodes.contains(&to) {
                edges.insert(Edge { head: v, relation: rel, tail: to });
                let i = adjacency
                    .binary_search_by_key(&v, |(node, _)| *node)
                    .expect("node present by construction");
                adjacency[i].1.push((rel, to));
            }
        }
    }
    // Graph adjacency is sorted, and filtering preserves order.

    Ok(Subgraph {
        pair_id: PairId { example_id: ex.example_id.clone(), candidate_index },
        nodes,
        edges,
        adjacency,
    })
}
