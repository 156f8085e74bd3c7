//! Generates the synthetic planted-evidence task, trains the KG encoder
//! alone on it, and evaluates the best-on-dev model. The only signal
//! separating the answer from the distractors is the relation type of the
//! paths connecting it to the question concepts.
//!
//! Run with: cargo run --example train_planted_task

use safe_qa::harness::{
    evaluate, format_log, generate, prepare_fresh, train, Mode, RunConfig, SynthSpec,
};
use safe_qa::Graph;

fn main() -> anyhow::Result<()> {
    let spec = SynthSpec { n_train: 120, n_dev: 60, ..SynthSpec::default() };
    let data = generate(&spec)?;

    let mut cfg = RunConfig::default();
    cfg.mode = Mode::KgOnly;
    cfg.epochs = 12;
    cfg.seed = 1;

    let graph = Graph::from_tsv_str(&data.graph_tsv, cfg.augment_inverses, "synth")?;
    println!(
        "planted task: {} nodes, {} relations, {} train / {} dev examples",
        graph.node_count(),
        graph.relation_count(),
        data.train.len(),
        data.dev.len()
    );

    let train_prep = prepare_fresh(&graph, &data.train, &cfg, None)?;
    let dev_prep = prepare_fresh(&graph, &data.dev, &cfg, None)?;
    let outcome = train(&cfg, &train_prep, &dev_prep, graph.relation_count())?;
    print!("{}", format_log(&outcome.log));
    println!(
        "best epoch {} with dev accuracy {:.6}",
        outcome.best_epoch, outcome.best_dev_accuracy
    );

    let report = evaluate(&outcome.params, None, &dev_prep, "dev", &cfg.hash())?;
    println!(
        "final dev: {}/{} correct, {} ties",
        report.correct, report.n_answered, report.tie_count
    );
    Ok(())
}
