//! Immutable multi-relational knowledge graph: loading, vocabulary induction,
//! and forward/inverse adjacency.
//!
//! The on-disk format is a UTF-8 TSV with one `relation<TAB>head<TAB>tail`
//! triple per line; `#`-prefixed lines are comments. Concept surfaces are
//! canonicalized to lowercase with underscores joining tokens. Relation and
//! concept vocabularies are induced from the data in first-appearance order.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Dense index of a concept node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ConceptId(pub u32);

/// Dense index of a relation type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RelationId(pub u32);

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for RelationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A relation type in the vocabulary. Inverse relations are generated during
/// augmentation and point back to their forward partner.
#[derive(Clone, Debug)]
pub struct RelationType {
    pub name: String,
    pub is_inverse: bool,
    pub partner: Option<RelationId>,
}

/// A directed, typed edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub head: ConceptId,
    pub relation: RelationId,
    pub tail: ConceptId,
}

/// Immutable multi-relational graph with per-node outgoing adjacency.
///
/// Safe to share across threads once loaded; there is no mutation API.
#[derive(Clone, Debug)]
pub struct Graph {
    concepts: Vec<String>,
    concept_index: HashMap<String, ConceptId>,
    relations: Vec<RelationType>,
    relation_index: HashMap<String, RelationId>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<(RelationId, ConceptId)>>,
    augmented: bool,
    duplicates_skipped: usize,
}

/// Canonical concept surface form: lowercase, whitespace runs joined by `_`.
pub fn canonicalize(surface: &str) -> String {
    surface
        .to_lowercase()
        .split_whitespace()
        .collect::<Vec<_>>()
        .join("_")
}

impl Graph {
    /// Loads a graph from a triple TSV. When `augment_inverses` is set, every
    /// triple `(h, r, t)` also yields `(t, inv_r, h)` with `inv_r` a fresh
    /// relation type marked as inverse; inverse ids follow all forward ids.
    pub fn load(path: impl AsRef<Path>, augment_inverses: bool) -> Result<Graph> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Graph::from_tsv_str(&text, augment_inverses, path)
    }

    /// Parses graph TSV content. `origin` is only used in error messages.
    pub fn from_tsv_str(text: &str, augment_inverses: bool, origin: impl AsRef<Path>) -> Result<Graph> {
        let origin = origin.as_ref();
        let mut concepts: Vec<String> = Vec::new();
        let mut concept_index: HashMap<String, ConceptId> = HashMap::new();
        let mut relations: Vec<RelationType> = Vec::new();
        let mut relation_index: HashMap<String, RelationId> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut seen: HashSet<(u32, u32, u32)> = HashSet::new();
        let mut duplicates_skipped = 0usize;

        let intern_concept = |surface: &str,
                                  concepts: &mut Vec<String>,
                                  index: &mut HashMap<String, ConceptId>|
         -> ConceptId {
            let canon = canonicalize(surface);
            if let Some(&id) = index.get(&canon) {
                return id;
            }
            let id = ConceptId(concepts.len() as u32);
            index.insert(canon.clone(), id);
            concepts.push(canon);
            id
        };

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = raw.trim_end_matches(['\r', '\n']).split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(
                    origin,
                    lineno + 1,
                    format!("expected 3 tab-separated fields, got {}", fields.len()),
                ));
            }
            let rel_name = fields[0].trim();
            if rel_name.is_empty() || fields[1].trim().is_empty() || fields[2].trim().is_empty() {
                return Err(Error::parse(origin, lineno + 1, "empty field"));
            }
            let rel = match relation_index.get(rel_name) {
                Some(&id) => id,
                None => {
                    let id = RelationId(relations.len() as u32);
                    relation_index.insert(rel_name.to_string(), id);
                    relations.push(RelationType {
                        name: rel_name.to_string(),
                        is_inverse: false,
                        partner: None,
                    });
                    id
                }
            };
            let head = intern_concept(fields[1], &mut concepts, &mut concept_index);
            let tail = intern_concept(fields[2], &mut concepts, &mut concept_index);
            if !seen.insert((head.0, rel.0, tail.0)) {
                duplicates_skipped += 1;
                continue;
            }
            edges.push(Edge { head, relation: rel, tail });
        }

        if augment_inverses {
            let n_forward = relations.len();
            for fwd in 0..n_forward {
                let inv_name = format!("inv_{}", relations[fwd].name);
                if relation_index.contains_key(&inv_name) {
                    return Err(Error::Invalid(format!(
                        "relation name {inv_name:?} collides with a generated inverse name"
                    )));
                }
                let inv_id = RelationId((n_forward + fwd) as u32);
                relation_index.insert(inv_name.clone(), inv_id);
                relations.push(RelationType {
                    name: inv_name,
                    is_inverse: true,
                    partner: Some(RelationId(fwd as u32)),
                });
                relations[fwd].partner = Some(inv_id);
            }
            let n_raw = edges.len();
            for i in 0..n_raw {
                let Edge { head, relation, tail } = edges[i];
                edges.push(Edge {
                    head: tail,
                    relation: RelationId(relation.0 + n_forward as u32),
                    tail: head,
                });
            }
        }

        let mut adjacency: Vec<Vec<(RelationId, ConceptId)>> = vec![Vec::new(); concepts.len()];
        for e in &edges {
            adjacency[e.head.0 as usize].push((e.relation, e.tail));
        }
        for out in &mut adjacency {
            out.sort_unstable();
        }

        Ok(Graph {
            concepts,
            concept_index,
            relations,
            relation_index,
            edges,
            adjacency,
            augmented: augment_inverses,
            duplicates_skipped,
        })
    }

    pub fn node_count(&self) -> usize {
        self.concepts.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn augmented(&self) -> bool {
        self.augmented
    }

    /// How many duplicate raw triples were skipped during load.
    pub fn duplicates_skipped(&self) -> usize {
        self.duplicates_skipped
    }

    pub fn concept_surface(&self, id: ConceptId) -> Result<&str> {
        self.concepts
            .get(id.0 as usize)
            .map(String::as_str)
            .ok_or(Error::UnknownConcept(id.0))
    }

    pub fn relation(&self, id: RelationId) -> &RelationType {
        &self.relations[id.0 as usize]
    }

    pub fn relation_names(&self) -> Vec<String> {
        self.relations.iter().map(|r| r.name.clone()).collect()
    }

    /// Exact-match lookup on the canonical surface form.
    pub fn lookup_concept(&self, surface: &str) -> Option<ConceptId> {
        self.concept_index.get(&canonicalize(surface)).copied()
    }

    pub fn lookup_relation(&self, name: &str) -> Option<RelationId> {
        self.relation_index.get(name).copied()
    }

    /// The inverse partner of a relation, when inverse augmentation is on.
    pub fn inverse_of(&self, id: RelationId) -> Option<RelationId> {
        self.relations.get(id.0 as usize).and_then(|r| r.partner)
    }

    /// Outgoing `(relation, neighbor)` pairs of `v`, sorted by relation id
    /// then neighbor id.
    pub fn neighbors(&self, v: ConceptId) -> Result<&[(RelationId, ConceptId)]> {
        self.adjacency
            .get(v.0 as usize)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownConcept(v.0))
    }

    /// Canonical TSV serialization: forward (non-inverse) triples in load
    /// order. Reloading the output with the same augmentation flag rebuilds
    /// an identical graph.
    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for e in &self.edges {
            let rel = &self.relations[e.relation.0 as usize];
            if rel.is_inverse {
                continue;
            }
            out.push_str(&rel.name);
            out.push('\t');
            out.push_str(&self.concepts[e.head.0 as usize]);
            out.push('\t');
            out.push_str(&self.concepts[e.tail.0 as usize]);
            out.push('\n');
        }
        out
    }

    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    /// Content hash over the canonical serialization plus the augmentation
    /// flag; used as the graph component of cache keys.
    pub fn content_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_tsv().as_bytes());
        hasher.update(if self.augmented { b"augmented:1" } else { b"augmented:0" });
        let digest = hasher.finalize();
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
