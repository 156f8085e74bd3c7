//! Training-fraction sweeps: each fraction is trained with three consecutive
//! seeds and reported as per-seed plus mean dev accuracy.

use crate::error::{Error, Result};

use super::config::{RunConfig, FRACTION_GRID};
use super::prepare::PreparedExample;
use super::train::train;

/// Seeds per fraction; consecutive offsets from the configured seed.
pub const SWEEP_SEEDS: u64 = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub fraction: f64,
    /// Best-on-dev accuracy per seed, in seed order.
    pub per_seed: Vec<f64>,
    pub mean_accuracy: f64,
}

/// Runs the sweep. Fractions are deduplicated and reported in ascending
/// order; subsamples nest across fractions because every run at the same
/// seed draws its prefix from the same shuffle.
pub fn sweep(
    config: &RunConfig,
    train_set: &[PreparedExample],
    dev_set: &[PreparedExample],
    fractions: &[f64],
    n_relations: usize,
) -> Result<Vec<SweepRow>> {
    if fractions.is_empty() {
        return Err(Error::Invalid("sweep needs at least one fraction".into()));
    }
    let mut sorted: Vec<f64> = fractions.to_vec();
    for f in &sorted {
        if !(*f > 0.0 && *f <= 1.0) {
            return Err(Error::Invalid(format!("sweep fraction {f} must be in (0, 1]")));
        }
    }
    sorted.sort_by(|a, b| a.total_cmp(b));
    sorted.dedup();

    let mut rows = Vec::with_capacity(sorted.len());
    for fraction in sorted {
        let mut per_seed = Vec::with_capacity(SWEEP_SEEDS as usize);
        for offset in 0..SWEEP_SEEDS {
            let mut cfg = config.clone();
            cfg.train_fraction = fraction;
            cfg.seed = config.seed + offset;
            let outcome = train(&cfg, train_set, dev_set, n_relations)?;
            per_seed.push(outcome.best_dev_accuracy);
        }
        let mean_accuracy = per_seed.iter().sum::<f64>() / per_seed.len() as f64;
        rows.push(SweepRow { fraction, per_seed, mean_accuracy });
    }
    Ok(rows)
}

/// Off-grid fractions are allowed but noted.
pub fn fraction_warnings(fractions: &[f64]) -> Vec<String> {
    fractions
        .iter()
        .filter(|f| !FRACTION_GRID.iter().any(|g| g == *f))
        .map(|f| format!("fraction {f} is outside the usual grid {FRACTION_GRID:?}"))
        .collect()
}

/// One row per fraction, preceded by the column header and the config hash.
pub fn format_sweep(rows: &[SweepRow], base_seed: u64, config_hash: &str) -> String {
    let mut out = format!("# config_hash\t{config_hash}\n");
    out.push_str("fraction");
    for offset in 0..SWEEP_SEEDS {
        out.push_str(&format!("\tseed_{}", base_seed + offset));
    }
    out.push_str("\tmean_accuracy\n");
    for row in rows {
        out.push_str(&format!("{:.6}", row.fraction));
        for acc in &row.per_seed {
            out.push_str(&format!("\t{acc:.6}"));
        }
        out.push_str(&format!("\t{:.6}\n", row.mean_accuracy));
    }
    out
}
