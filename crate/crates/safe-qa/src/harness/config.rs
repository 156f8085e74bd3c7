//! Run configuration: hyperparameters, seeding, and the stable config hash
//! carried by every produced artifact.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::SafeConfig;
use crate::ptm::MissingScorePolicy;

/// Where per-candidate text scores come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Scores loaded from a score file (default).
    ScoreFile,
    /// Built-in lexical scorer, co-trained with the KG encoder.
    ToyScorer,
    /// No text scores: the KG encoder works alone.
    KgOnly,
}

/// Hyperparameter grids used by published sweeps; off-grid values work but
/// draw a warning.
pub const BATCH_GRID: &[usize] = &[32, 48, 60, 120];
pub const KG_LR_GRID: &[f64] = &[1e-3, 1e-2];
pub const TOY_LR_GRID: &[f64] = &[1e-4, 1e-5, 2e-5];
pub const FRACTION_GRID: &[f64] = &[0.05, 0.1, 0.2, 0.5, 0.8, 1.0];

/// Everything that determines a run besides the input files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Hop limit for path extraction (1..=3).
    pub k: usize,
    /// Path-encoder hidden width.
    pub hidden_path: usize,
    /// Scaling-head hidden width.
    pub hidden_scale: usize,
    /// Toy-scorer head hidden width.
    pub hidden_toy: usize,
    pub batch_size: usize,
    /// Learning rate for the KG encoder.
    pub kg_lr: f64,
    /// Learning rate for the co-trained toy scorer.
    pub toy_lr: f64,
    pub epochs: usize,
    pub seed: u64,
    /// Fraction of the training split actually used, sampled as a seeded
    /// shuffle prefix so larger fractions contain smaller ones.
    pub train_fraction: f64,
    /// Per-pair cap on enumerated node-level paths.
    pub path_cap: usize,
    pub mode: Mode,
    /// Add a reversed edge with an `inv_`-prefixed relation for every triple.
    pub augment_inverses: bool,
    pub missing_score_policy: MissingScorePolicy,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            k: 2,
            hidden_path: 48,
            hidden_scale: 16,
            hidden_toy: 8,
            batch_size: 32,
            kg_lr: 1e-2,
            toy_lr: 1e-4,
            epochs: 200,
            seed: 0,
            train_fraction: 1.0,
            path_cap: 1_000_000,
            mode: Mode::ScoreFile,
            augment_inverses: true,
            missing_score_policy: MissingScorePolicy::Error,
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::parse(path, 0, e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.k) {
            return Err(Error::Invalid(format!("k must be in 1..=3, got {}", self.k)));
        }
        for (name, dim) in [
            ("hidden_path", self.hidden_path),
            ("hidden_scale", self.hidden_scale),
            ("hidden_toy", self.hidden_toy),
            ("batch_size", self.batch_size),
            ("path_cap", self.path_cap),
        ] {
            if dim == 0 {
                return Err(Error::Invalid(format!("{name} must be positive")));
            }
        }
        if !(self.train_fraction > 0.0 && self.train_fraction <= 1.0) {
            return Err(Error::Invalid(format!(
                "train_fraction must be in (0, 1], got {}",
                self.train_fraction
            )));
        }
        for (name, lr) in [("kg_lr", self.kg_lr), ("toy_lr", self.toy_lr)] {
            if !(lr.is_finite() && lr > 0.0) {
                return Err(Error::Invalid(format!("{name} must be positive, got {lr}")));
            }
        }
        Ok(())
    }

    /// Non-fatal notes about values outside the published grids.
    pub fn grid_warnings(&self) -> Vec<String> {
        let mut warnings = Vec::new();
        if !BATCH_GRID.contains(&self.batch_size) {
            warnings.push(format!(
                "batch_size {} is outside the usual grid {BATCH_GRID:?}",
                self.batch_size
            ));
        }
        if !KG_LR_GRID.contains(&self.kg_lr) {
            warnings.push(format!("kg_lr {} is outside the usual grid {KG_LR_GRID:?}", self.kg_lr));
        }
        if self.mode == Mode::ToyScorer && !TOY_LR_GRID.contains(&self.toy_lr) {
            warnings.push(format!(
                "toy_lr {} is outside the usual grid {TOY_LR_GRID:?}",
                self.toy_lr
            ));
        }
        if !FRACTION_GRID.iter().any(|f| f == &self.train_fraction) {
            warnings.push(format!(
                "train_fraction {} is outside the usual grid {FRACTION_GRID:?}",
                self.train_fraction
            ));
        }
        warnings
    }

    /// Architecture for a graph with `n_relations` relation types.
    pub fn safe_config(&self, n_relations: usize) -> SafeConfig {
        SafeConfig {
            k: self.k,
            n_relations,
            hidden_path: self.hidden_path,
            hidden_scale: self.hidden_scale,
        }
    }

    /// First 16 hex chars of the SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(json.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
