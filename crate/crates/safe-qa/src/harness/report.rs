//! Parameter accounting: closed-form counts cross-checked against actually
//! instantiated tensors.

use crate::error::{Error, Result};
use crate::model::SafeParameters;
use crate::ptm::{ToyScorer, TOY_FEATURES};

use super::config::{Mode, RunConfig};

/// Relation-type count of the reference commonsense graph after inverse
/// augmentation (18 forward relations); the documented default totals assume
/// it.
pub const DEFAULT_N_RELATIONS: usize = 36;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamReport {
    pub k: usize,
    pub n_relations: usize,
    pub input_dim: usize,
    pub path_encoder: usize,
    pub scaler: usize,
    /// path_encoder + scaler.
    pub kg_total: usize,
    /// Present only in toy-scorer mode.
    pub toy_scorer: Option<usize>,
}

impl ParamReport {
    pub fn grand_total(&self) -> usize {
        self.kg_total + self.toy_scorer.unwrap_or(0)
    }
}

fn mlp_params(in_dim: usize, hidden: usize, out_dim: usize) -> usize {
    in_dim * hidden + hidden + hidden * out_dim + out_dim
}

/// Computes the closed-form counts and verifies them against freshly
/// instantiated tensors; any disagreement is a bug, reported as an error.
pub fn param_report(config: &RunConfig, n_relations: usize) -> Result<ParamReport> {
    config.validate()?;
    let sc = config.safe_config(n_relations);
    let input_dim = sc.input_dim();
    let path_encoder = mlp_params(input_dim, config.hidden_path, 1);
    let scaler = mlp_params(1, config.hidden_scale, 1);
    let kg_total = path_encoder + scaler;

    let instantiated = SafeParameters::zeros(sc).param_count();
    if instantiated != kg_total {
        return Err(Error::Incompatible(format!(
            "closed-form KG parameter count {kg_total} disagrees with instantiated {instantiated}"
        )));
    }

    let toy_scorer = if config.mode == Mode::ToyScorer {
        let closed = TOY_FEATURES + mlp_params(TOY_FEATURES, config.hidden_toy, 1);
        let instantiated = ToyScorer::zeros(config.hidden_toy).param_count();
        if instantiated != closed {
            return Err(Error::Incompatible(format!(
                "closed-form toy parameter count {closed} disagrees with instantiated {instantiated}"
            )));
        }
        Some(closed)
    } else {
        None
    };

    Ok(ParamReport {
        k: config.k,
        n_relations,
        input_dim,
        path_encoder,
        scaler,
        kg_total,
        toy_scorer,
    })
}

pub fn format_param_report(r: &ParamReport, config_hash: &str) -> String {
    let mut out = format!("# config_hash\t{config_hash}\n");
    out.push_str(&format!("# k\t{}\n", r.k));
    out.push_str(&format!("# n_relations\t{}\n", r.n_relations));
    out.push_str(&format!("# input_dim\t{}\n", r.input_dim));
    out.push_str("component\tparameters\n");
    out.push_str(&format!("path_encoder\t{}\n", r.path_encoder));
    out.push_str(&format!("scaler\t{}\n", r.scaler));
    out.push_str(&format!("kg_total\t{}\n", r.kg_total));
    if let Some(toy) = r.toy_scorer {
        out.push_str(&format!("toy_scorer\t{toy}\n"));
    }
    out.push_str(&format!("total\t{}\n", r.grand_total()));
    out
}
