//! Trains on the planted task, then prints the precomputable path-value
//! table: the encoder's scalar value for every simplified path observed in
//! the data, sorted descending. A trained model separates the evidence
//! relation from the noise relation by value.
//!
//! Run with: cargo run --example path_value_table

use safe_qa::harness::{collect_vocabulary, generate, prepare_fresh, train, Mode, RunConfig, SynthSpec};
use safe_qa::model::dump_path_values;
use safe_qa::Graph;

fn main() -> anyhow::Result<()> {
    let data = generate(&SynthSpec { n_train: 150, n_dev: 60, ..SynthSpec::default() })?;
    let mut cfg = RunConfig::default();
    cfg.mode = Mode::KgOnly;
    cfg.epochs = 15;

    let graph = Graph::from_tsv_str(&data.graph_tsv, cfg.augment_inverses, "synth")?;
    let train_prep = prepare_fresh(&graph, &data.train, &cfg, None)?;
    let dev_prep = prepare_fresh(&graph, &data.dev, &cfg, None)?;

    // Before training, values reflect only the random initialization.
    let vocab = collect_vocabulary(&dev_prep);
    let names = graph.relation_names();
    let mut init_cfg = cfg.clone();
    init_cfg.epochs = 0;
    let init = train(&init_cfg, &train_prep, &dev_prep, graph.relation_count())?;
    println!("path values at initialization:");
    print!("{}", dump_path_values(&init.params, &vocab, &names)?);

    let outcome = train(&cfg, &train_prep, &dev_prep, graph.relation_count())?;
    println!(
        "\npath values after training (best epoch {}, dev accuracy {:.3}):",
        outcome.best_epoch, outcome.best_dev_accuracy
    );
    // x_p depends only on the path type, never the example, so this table is
    // the entire KG-side model up to the frequency weighting and the scaler.
    print!("{}", dump_path_values(&outcome.params, &vocab, &names)?);
    Ok(())
}
