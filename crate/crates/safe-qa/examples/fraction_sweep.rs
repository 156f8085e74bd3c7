//! Measures accuracy as a function of the training-data fraction. Each
//! fraction trains on a prefix of one fixed per-seed shuffle, so smaller
//! fractions are strict subsets of larger ones, and every cell averages
//! three consecutive seeds.
//!
//! Run with: cargo run --example fraction_sweep

use safe_qa::harness::{format_sweep, generate, prepare_fresh, sweep, Mode, RunConfig, SynthSpec};
use safe_qa::Graph;

fn main() -> anyhow::Result<()> {
    let data = generate(&SynthSpec { n_train: 200, n_dev: 80, ..SynthSpec::default() })?;
    let mut cfg = RunConfig::default();
    cfg.mode = Mode::KgOnly;
    cfg.epochs = 10;

    let graph = Graph::from_tsv_str(&data.graph_tsv, cfg.augment_inverses, "synth")?;
    let train_prep = prepare_fresh(&graph, &data.train, &cfg, None)?;
    let dev_prep = prepare_fresh(&graph, &data.dev, &cfg, None)?;

    let fractions = [0.05, 0.2, 1.0];
    let rows = sweep(&cfg, &train_prep, &dev_prep, &fractions, graph.relation_count())?;
    print!("{}", format_sweep(&rows, cfg.seed, &cfg.hash()));
    Ok(())
}
