//! Relation-path extraction: k-hop constrained depth-first enumeration of
//! simple question→candidate paths, simplification to role-typed relation
//! sequences, and frequency counting.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::graph::{ConceptId, Graph, RelationId};
use crate::ground::{PairId, Subgraph};

/// Default per-pair cap on enumerated node-level paths.
pub const DEFAULT_PATH_CAP: usize = 1_000_000;

/// Anything that can answer "outgoing edges of v, sorted by (relation,
/// neighbor)": the full graph or an evidence subgraph.
pub trait AdjacencySource {
    fn out_edges(&self, v: ConceptId) -> &[(RelationId, ConceptId)];
}

impl AdjacencySource for Graph {
    fn out_edges(&self, v: ConceptId) -> &[(RelationId, ConceptId)] {
        self.neighbors(v).unwrap_or(&[])
    }
}

impl AdjacencySource for Subgraph {
    fn out_edges(&self, v: ConceptId) -> &[(RelationId, ConceptId)] {
        self.neighbors(v)
    }
}

/// Node role along a path: question concept, answer (candidate) concept, or
/// anything else.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeRole {
    Question = 0,
    Answer = 1,
    Other = 2,
}

impl NodeRole {
    pub fn as_u8(self) -> u8 {
        self as u8
    }

    pub fn from_u8(v: u8) -> Result<NodeRole> {
        match v {
            0 => Ok(NodeRole::Question),
            1 => Ok(NodeRole::Answer),
            2 => Ok(NodeRole::Other),
            other => Err(Error::Invalid(format!("node role out of range: {other}"))),
        }
    }
}

/// A concrete path through the graph: h+1 nodes joined by h relations.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct NodePath {
    pub nodes: Vec<ConceptId>,
    pub relations: Vec<RelationId>,
}

/// A path with node identities replaced by roles. Ordering is lexicographic
/// on roles, then relations; this is the canonical order used everywhere
/// determinism matters.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SimplifiedPath {
    pub roles: Vec<NodeRole>,
    pub relations: Vec<RelationId>,
}

impl SimplifiedPath {
    /// Hop count h; `roles` has length h+1.
    pub fn hops(&self) -> usize {
        self.relations.len()
    }
}

/// The frequency multiset of simplified paths for one question–candidate
/// pair. Duplicate simplifications are always merged, so `entries` is the
/// canonical (split/merge-invariant) representation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathFeatureSet {
    pub pair_id: PairId,
    pub entries: BTreeMap<SimplifiedPath, u64>,
    /// Set when enumeration stopped early at the path cap.
    pub truncated: bool,
}

impl PathFeatureSet {
    pub fn empty(pair_id: PairId) -> PathFeatureSet {
        PathFeatureSet { pair_id, entries: BTreeMap::new(), truncated: false }
    }

    /// Builds a feature set from (path, frequency) entries, merging
    /// duplicates by summing their frequencies.
    pub fn from_entries(
        pair_id: PairId,
        entries: impl IntoIterator<Item = (SimplifiedPath, u64)>,
        truncated: bool,
    ) -> PathFeatureSet {
        let mut map: BTreeMap<SimplifiedPath, u64> = BTreeMap::new();
        for (p, f) in entries {
            *map.entry(p).or_insert(0) += f;
        }
        map.retain(|_, f| *f > 0);
        PathFeatureSet { pair_id, entries: map, truncated }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn distinct_paths(&self) -> usize {
        self.entries.len()
    }

    /// Total node-level path count: Σ f_j.
    pub fn total_paths(&self) -> u64 {
        self.entries.values().sum()
    }
}

/// Depth-first walk over all simple paths of length 1..=k that start in
/// `vq` and end in `vc`. `visit` receives each path's node and relation
/// sequences in deterministic order (start nodes ascending, children in
/// adjacency order) and returns false to abort the walk.
fn walk_paths<A: AdjacencySource + ?Sized>(
    adj: &A,
    vq: &BTreeSet<ConceptId>,
    vc: &BTreeSet<ConceptId>,
    k: usize,
    visit: &mut impl FnMut(&[ConceptId], &[RelationId]) -> bool,
) -> bool {
    fn recurse<A: AdjacencySource + ?Sized>(
        adj: &A,
        vc: &BTreeSet<ConceptId>,
        k: usize,
        nodes: &mut Vec<ConceptId>,
        rels: &mut Vec<RelationId>,
        visit: &mut impl FnMut(&[ConceptId], &[RelationId]) -> bool,
    ) -> bool {
        let depth = rels.len();
        if depth >= 1 && vc.contains(nodes.last().expect("non-empty stack")) {
            if !visit(nodes, rels) {
                return false;
            }
        }
        if depth == k {
            return true;
        }
        let v = *nodes.last().expect("non-empty stack");
        for &(rel, to) in adj.out_edges(v) {
            if nodes.contains(&to) {
                continue;
            }
            nodes.push(to);
            rels.push(rel);
            let keep_going = recurse(adj, vc, k, nodes, rels, visit);
            nodes.pop();
            rels.pop();
            if !keep_going {
                return false;
            }
        }
        true
    }

    let mut nodes = Vec::with_capacity(k + 1);
    let mut rels = Vec::with_capacity(k);
    for &start in vq {
        nodes.push(start);
        let keep_going = recurse(adj, vc, k, &mut nodes, &mut rels, visit);
        nodes.pop();
        if !keep_going {
            return false;
        }
    }
    true
}

/// Enumerates every simple path of 1..=k hops from `vq` to `vc` in
/// deterministic order. Stops after `cap` paths; the second return value is
/// true iff at least one further path was cut off.
pub fn enumerate_paths<A: AdjacencySource + ?Sized>(
    adj: &A,
    vq: &BTreeSet<ConceptId>,
    vc: &BTreeSet<ConceptId>,
    k: usize,
    cap: usize,
) -> Result<(Vec<NodePath>, bool)> {
    if k < 1 {
        return Err(Error::Invalid("hop limit k must be at least 1".into()));
    }
    let mut out: Vec<NodePath> = Vec::new();
    let mut truncated = false;
    walk_paths(adj, vq, vc, k, &mut |nodes, rels| {
        if out.len() == cap {
            truncated = true;
            return false;
        }
        out.push(NodePath { nodes: nodes.to_vec(), relations: rels.to_vec() });
        true
    });
    Ok((out, truncated))
}

/// All nodes lying on at least one simple ≤k-hop path from `vq` to `vc`.
/// Uncapped: used for evidence-subgraph construction.
pub fn collect_path_nodes(
    adj: &impl AdjacencySource,
    vq: &BTreeSet<ConceptId>,
    vc: &BTreeSet<ConceptId>,
    k: usize,
) -> Result<BTreeSet<ConceptId>> {
    if k < 1 {
        return Err(Error::Invalid("hop limit k must be at least 1".into()));
    }
    let mut nodes = BTreeSet::new();
    walk_paths(adj, vq, vc, k, &mut |path_nodes, _| {
        nodes.extend(path_nodes.iter().copied());
        true
    });
    Ok(nodes)
}

/// Replaces node identities with roles. Endpoints are forced to
/// QUESTION/ANSWER; interior nodes use precedence QUESTION > ANSWER > OTHER
/// when they appear in both seed sets.
pub fn simplify(
    path: &NodePath,
    vq: &BTreeSet<ConceptId>,
    vc: &BTreeSet<ConceptId>,
) -> SimplifiedPath {
    let last = path.nodes.len() - 1;
    let roles = path
        .nodes
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if i == 0 {
                NodeRole::Question
            } else if i == last {
                NodeRole::Answer
            } else if vq.contains(v) {
                NodeRole::Question
            } else if vc.contains(v) {
                NodeRole::Answer
            } else {
                NodeRole::Other
            }
        })
        .collect();
    SimplifiedPath { roles, relations: path.relations.clone() }
}

/// Enumerates, simplifies, and counts: the full feature-extraction step for
/// one question–candidate pair.
pub fn build_feature_set<A: AdjacencySource + ?Sized>(
    adj: &A,
    pair_id: PairId,
    vq: &BTreeSet<ConceptId>,
    vc: &BTreeSet<ConceptId>,
    k: usize,
    cap: usize,
) -> Result<PathFeatureSet> {
    let (paths, truncated) = enumerate_paths(adj, vq, vc, k, cap)?;
    let mut entries: BTreeMap<SimplifiedPath, u64> = BTreeMap::new();
    for p in &paths {
        *entries.entry(simplify(p, vq, vc)).or_insert(0) += 1;
    }
    Ok(PathFeatureSet { pair_id, entries, truncated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn pair() -> PairId {
        PairId { example_id: "ex".into(), candidate_index: 0 }
    }

    fn ids(g: &Graph, names: &[&str]) -> BTreeSet<ConceptId> {
        names.iter().map(|n| g.lookup_concept(n).unwrap()).collect()
    }

    fn triangle() -> Graph {
        // a -r1-> b -r2-> c and a -r3-> c
        Graph::from_tsv_str("r1\ta\tb\nr2\tb\tc\nr3\ta\tc\n", false, "test").unwrap()
    }

    #[test]
    fn triangle_has_two_paths_at_k2() {
        let g = triangle();
        let (paths, truncated) =
            enumerate_paths(&g, &ids(&g, &["a"]), &ids(&g, &["c"]), 2, DEFAULT_PATH_CAP).unwrap();
        assert!(!truncated);
        let as_names: Vec<(Vec<&str>, Vec<&str>)> = paths
            .iter()
            .map(|p| {
                (
                    p.nodes.iter().map(|&n| g.concept_surface(n).unwrap()).collect(),
                    p.relations.iter().map(|&r| g.relation(r).name.as_str()).collect(),
                )
            })
            .collect();
        // DFS order: a's adjacency is [(r1,b),(r3,c)], so the 2-hop path
        // through b is discovered first.
        assert_eq!(
            as_names,
            vec![
                (vec!["a", "b", "c"], vec!["r1", "r2"]),
                (vec!["a", "c"], vec!["r3"]),
            ]
        );
    }

    #[test]
    fn triangle_has_one_path_at_k1() {
        let g = triangle();
        let (paths, _) =
            enumerate_paths(&g, &ids(&g, &["a"]), &ids(&g, &["c"]), 1, DEFAULT_PATH_CAP).unwrap();
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].relations.len(), 1);
    }

    #[test]
    fn zero_hop_paths_are_excluded() {
        let g = triangle();
        let seeds = ids(&g, &["a"]);
        let (paths, _) = enumerate_paths(&g, &seeds, &seeds, 2, DEFAULT_PATH_CAP).unwrap();
        assert!(paths.is_empty());
    }

    #[test]
    fn cap_truncates_deterministically() {
        let g = triangle();
        let (paths, truncated) =
            enumerate_paths(&g, &ids(&g, &["a"]), &ids(&g, &["c"]), 2, 1).unwrap();
        assert!(truncated);
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].nodes.len(), 3); // the 2-hop path comes first
    }

    #[test]
    fn exact_cap_is_not_truncation() {
        let g = triangle();
        let (paths, truncated) =
            enumerate_paths(&g, &ids(&g, &["a"]), &ids(&g, &["c"]), 2, 2).unwrap();
        assert_eq!(paths.len(), 2);
        assert!(!truncated);
    }

    #[test]
    fn simplify_assigns_roles_with_precedence() {
        let g = triangle();
        let vq = ids(&g, &["a"]);
        let vc = ids(&g, &["c"]);
        let (paths, _) = enumerate_paths(&g, &vq, &vc, 2, DEFAULT_PATH_CAP).unwrap();

        let two_hop = simplify(&paths[0], &vq, &vc);
        assert_eq!(
            two_hop.roles,
            vec![NodeRole::Question, NodeRole::Other, NodeRole::Answer]
        );
        let one_hop = simplify(&paths[1], &vq, &vc);
        assert_eq!(one_hop.roles, vec![NodeRole::Question, NodeRole::Answer]);

        // Interior node that is also a question concept types as QUESTION.
        let vq_with_b = ids(&g, &["a", "b"]);
        let mid_q = simplify(&paths[0], &vq_with_b, &vc);
        assert_eq!(
            mid_q.roles,
            vec![NodeRole::Question, NodeRole::Question, NodeRole::Answer]
        );
        // Interior node in both seed sets: QUESTION wins over ANSWER.
        let vc_with_b = ids(&g, &["b", "c"]);
        let mid_both = simplify(&paths[0], &vq_with_b, &vc_with_b);
        assert_eq!(mid_both.roles[1], NodeRole::Question);
    }

    #[test]
    fn feature_set_groups_identical_simplifications() {
        // Two parallel 2-hop routes with the same relation pattern.
        let g = Graph::from_tsv_str("r\ta\tb1\nr2\tb1\tc\nr\ta\tb2\nr2\tb2\tc\n", false, "t")
            .unwrap();
        let fs = build_feature_set(
            &g,
            pair(),
            &ids(&g, &["a"]),
            &ids(&g, &["c"]),
            2,
            DEFAULT_PATH_CAP,
        )
        .unwrap();
        assert_eq!(fs.distinct_paths(), 1);
        assert_eq!(fs.total_paths(), 2);
        let (p, &f) = fs.entries.iter().next().unwrap();
        assert_eq!(f, 2);
        assert_eq!(p.roles, vec![NodeRole::Question, NodeRole::Other, NodeRole::Answer]);
    }

    #[test]
    fn feature_set_on_triangle() {
        let g = triangle();
        let fs = build_feature_set(
            &g,
            pair(),
            &ids(&g, &["a"]),
            &ids(&g, &["c"]),
            2,
            DEFAULT_PATH_CAP,
        )
        .unwrap();
        assert_eq!(fs.distinct_paths(), 2);
        assert_eq!(fs.total_paths(), 2);
    }

    #[test]
    fn disconnected_pair_yields_empty_set() {
        let g = Graph::from_tsv_str("r\ta\tb\nr\tc\td\n", false, "t").unwrap();
        let fs = build_feature_set(
            &g,
            pair(),
            &ids(&g, &["a"]),
            &ids(&g, &["d"]),
            3,
            DEFAULT_PATH_CAP,
        )
        .unwrap();
        assert!(fs.is_empty());
        assert!(!fs.truncated);
    }

    #[test]
    fn from_entries_merges_duplicates() {
        let p = SimplifiedPath {
            roles: vec![NodeRole::Question, NodeRole::Answer],
            relations: vec![RelationId(0)],
        };
        let fs = PathFeatureSet::from_entries(pair(), vec![(p.clone(), 1), (p.clone(), 1)], false);
        assert_eq!(fs.entries[&p], 2);
        assert_eq!(fs.distinct_paths(), 1);
    }

    /// Brute-force oracle: enumerate candidate node sequences by counting in
    /// base n (structurally unrelated to the DFS), then attach every
    /// combination of per-step relations.
    fn brute_force(
        g: &Graph,
        vq: &BTreeSet<ConceptId>,
        vc: &BTreeSet<ConceptId>,
        k: usize,
    ) -> BTreeSet<(Vec<ConceptId>, Vec<RelationId>)> {
        let n = g.node_count() as u64;
        let mut out = BTreeSet::new();
        for len in 2..=(k + 1) {
            for code in 0..n.pow(len as u32) {
                let mut seq = Vec::with_capacity(len);
                let mut c = code;
                for _ in 0..len {
                    seq.push(ConceptId((c % n) as u32));
                    c /= n;
                }
                let distinct: BTreeSet<_> = seq.iter().collect();
                if distinct.len() != len
                    || !vq.contains(&seq[0])
                    || !vc.contains(&seq[len - 1])
                {
                    continue;
                }
                let step_rels: Vec<Vec<RelationId>> = seq
                    .windows(2)
                    .map(|w| {
                        g.edges()
                            .iter()
                            .filter(|e| e.head == w[0] && e.tail == w[1])
                            .map(|e| e.relation)
                            .collect()
                    })
                    .collect();
                if step_rels.iter().any(Vec::is_empty) {
                    continue;
                }
                let mut combo = vec![0usize; step_rels.len()];
                loop {
                    let rels: Vec<RelationId> =
                        combo.iter().zip(&step_rels).map(|(&i, opts)| opts[i]).collect();
                    out.insert((seq.clone(), rels));
                    let mut pos = 0;
                    loop {
                        if pos == combo.len() {
                            break;
                        }
                        combo[pos] += 1;
                        if combo[pos] < step_rels[pos].len() {
                            break;
                        }
                        combo[pos] = 0;
                        pos += 1;
                    }
                    if pos == combo.len() {
                        break;
                    }
                }
            }
        }
        out
    }

    fn random_graph(rng: &mut ChaCha20Rng) -> Graph {
        let n_nodes = rng.gen_range(2..=8usize);
        let n_rels = rng.gen_range(1..=4usize);
        let n_edges = rng.gen_range(0..=18usize);
        let mut text = String::new();
        for _ in 0..n_edges {
            text.push_str(&format!(
                "r{}\tn{}\tn{}\n",
                rng.gen_range(0..n_rels),
                rng.gen_range(0..n_nodes),
                rng.gen_range(0..n_nodes)
            ));
        }
        let augment = rng.gen_bool(0.5);
        Graph::from_tsv_str(&text, augment, "random").unwrap()
    }

    fn random_seed_sets(
        rng: &mut ChaCha20Rng,
        g: &Graph,
    ) -> (BTreeSet<ConceptId>, BTreeSet<ConceptId>) {
        let pick = |rng: &mut ChaCha20Rng| -> BTreeSet<ConceptId> {
            let n = g.node_count().max(1);
            (0..rng.gen_range(1..=2usize))
                .map(|_| ConceptId(rng.gen_range(0..n) as u32))
                .collect()
        };
        (pick(rng), pick(rng))
    }

    #[test]
    fn dfs_matches_brute_force_oracle() {
        let mut rng = ChaCha20Rng::seed_from_u64(23);
        for _ in 0..60 {
            let g = random_graph(&mut rng);
            if g.node_count() == 0 {
                continue;
            }
            let (vq, vc) = random_seed_sets(&mut rng, &g);
            let k = rng.gen_range(1..=3usize);
            let (paths, truncated) = enumerate_paths(&g, &vq, &vc, k, usize::MAX).unwrap();
            assert!(!truncated);
            let got: BTreeSet<(Vec<ConceptId>, Vec<RelationId>)> = paths
                .iter()
                .map(|p| (p.nodes.clone(), p.relations.clone()))
                .collect();
            assert_eq!(got.len(), paths.len(), "duplicate paths emitted");
            assert_eq!(got, brute_force(&g, &vq, &vc, k));
        }
    }

    #[test]
    fn conservation_and_roles_on_random_graphs() {
        let mut rng = ChaCha20Rng::seed_from_u64(29);
        for _ in 0..40 {
            let g = random_graph(&mut rng);
            if g.node_count() == 0 {
                continue;
            }
            let (vq, vc) = random_seed_sets(&mut rng, &g);
            let k = rng.gen_range(1..=3usize);
            let (paths, _) = enumerate_paths(&g, &vq, &vc, k, usize::MAX).unwrap();
            let fs =
                build_feature_set(&g, pair(), &vq, &vc, k, usize::MAX).unwrap();
            assert_eq!(fs.total_paths(), paths.len() as u64);
            for p in fs.entries.keys() {
                assert_eq!(p.roles.len(), p.relations.len() + 1);
                assert_eq!(p.roles[0], NodeRole::Question);
                assert_eq!(*p.roles.last().unwrap(), NodeRole::Answer);
                assert!(p.hops() >= 1 && p.hops() <= k);
            }
            // Determinism: a second run reproduces the result exactly.
            let fs2 = build_feature_set(&g, pair(), &vq, &vc, k, usize::MAX).unwrap();
            assert_eq!(fs, fs2);
        }
    }

    #[test]
    fn subgraph_enumeration_equals_graph_enumeration() {
        use crate::ground::{build_subgraph, GroundedExample};
        let mut rng = ChaCha20Rng::seed_from_u64(31);
        for _ in 0..40 {
            let g = random_graph(&mut rng);
            if g.node_count() == 0 {
                continue;
            }
            let (vq, vc) = random_seed_sets(&mut rng, &g);
            let k = rng.gen_range(1..=3usize);
            let ex = GroundedExample {
                example_id: "ex".into(),
                question_text: String::new(),
                candidates: vec![String::new(), String::new()],
                answer_index: None,
                question_concepts: vq.clone(),
                candidate_concepts: vec![vc.clone(), BTreeSet::new()],
            };
            let sub = build_subgraph(&g, &ex, 0, k).unwrap();
            let (on_graph, _) = enumerate_paths(&g, &vq, &vc, k, usize::MAX).unwrap();
            let (on_sub, _) = enumerate_paths(&sub, &vq, &vc, k, usize::MAX).unwrap();
            assert_eq!(on_graph, on_sub);

            // Soundness: every retained non-seed node lies on some path.
            let mut on_paths = BTreeSet::new();
            for p in &on_graph {
                on_paths.extend(p.nodes.iter().copied());
            }
            for &v in sub.nodes() {
                assert!(
                    on_paths.contains(&v) || vq.contains(&v) || vc.contains(&v),
                    "node {v:?} retained but on no path"
                );
            }
        }
    }

    #[test]
    fn node_role_u8_roundtrip() {
        for (role, code) in [
            (NodeRole::Question, 0u8),
            (NodeRole::Answer, 1),
            (NodeRole::Other, 2),
        ] {
            assert_eq!(role.as_u8(), code);
            assert_eq!(NodeRole::from_u8(code).unwrap(), role);
        }
        assert!(NodeRole::from_u8(3).is_err());
    }
}
