//! Knowledge-graph evidence scoring for multiple-choice question answering.
//!
//! The pipeline: ground question/candidate text to concepts in a
//! multi-relational graph, enumerate ≤k-hop simple relation paths between
//! them, simplify paths to role-typed relation sequences with frequencies,
//! score each distinct path with a small MLP, aggregate by frequency, scale,
//! and fuse with an external per-candidate text-model score before softmax.
//!
//! Start with the `examples/` directory for runnable end-to-end tours.

pub mod codec;
pub mod error;
pub mod graph;
pub mod ground;
pub mod harness;
pub mod model;
pub mod nn;
pub mod paths;
pub mod ptm;

pub use error::{Error, Result};
pub use model::{
    argmax_with_tie, batch_loss_and_grads, dump_path_values, score_candidates, softmax,
    train_step, CandidateScore, SafeConfig, SafeGrads, SafeParameters, TrainExample,
};
pub use ptm::{
    lexical_features, load_scores, resolve_scores, save_scores, MissingScorePolicy,
    PtmScoreRecord, ToyScorer,
};
pub use graph::{ConceptId, Edge, Graph, RelationId, RelationType};
pub use ground::{build_subgraph, ground, GroundedExample, PairId, Subgraph};
pub use paths::{
    build_feature_set, enumerate_paths, simplify, NodePath, NodeRole, PathFeatureSet,
    SimplifiedPath, DEFAULT_PATH_CAP,
};
