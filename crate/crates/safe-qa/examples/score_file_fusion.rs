//! Fuses precomputed text-model scores with the KG encoder: the final score
//! of a candidate is the plain sum s_total = s_ptm + s_kg. Here the score
//! file is deliberately uninformative noise, so any accuracy above chance
//! comes from the KG side learning the planted evidence.
//!
//! Run with: cargo run --example score_file_fusion

use std::collections::BTreeMap;

use safe_qa::harness::{generate, prepare_fresh, train, Mode, RunConfig, ScoresMode, SynthSpec};
use safe_qa::Graph;

fn main() -> anyhow::Result<()> {
    let spec = SynthSpec {
        n_train: 120,
        n_dev: 60,
        scores: ScoresMode::Random,
        ..SynthSpec::default()
    };
    let data = generate(&spec)?;
    let scores: BTreeMap<String, Vec<f64>> = data
        .scores
        .as_ref()
        .expect("random-score mode emits a score file")
        .iter()
        .map(|r| (r.id.clone(), r.scores.clone()))
        .collect();

    let mut cfg = RunConfig::default();
    cfg.mode = Mode::ScoreFile;
    cfg.epochs = 20;

    let graph = Graph::from_tsv_str(&data.graph_tsv, cfg.augment_inverses, "synth")?;
    let train_prep = prepare_fresh(&graph, &data.train, &cfg, Some(&scores))?;
    let dev_prep = prepare_fresh(&graph, &data.dev, &cfg, Some(&scores))?;

    // With zero epochs the KG encoder stays at its random initialization and
    // the noisy text scores dominate: accuracy sits near chance (0.25).
    let mut frozen = cfg.clone();
    frozen.epochs = 0;
    let before = train(&frozen, &train_prep, &dev_prep, graph.relation_count())?;
    println!("dev accuracy with untrained KG encoder: {:.3}", before.best_dev_accuracy);

    let outcome = train(&cfg, &train_prep, &dev_prep, graph.relation_count())?;
    println!(
        "dev accuracy after {} epochs of KG training: {:.3} (best epoch {})",
        cfg.epochs, outcome.best_dev_accuracy, outcome.best_epoch
    );

    // The built-in toy lexical scorer is the self-contained alternative to a
    // score file; on this task its features carry no signal by construction,
    // so the KG side still does all the work.
    let mut toy_cfg = RunConfig::default();
    toy_cfg.mode = Mode::ToyScorer;
    toy_cfg.epochs = 20;
    let toy_train = prepare_fresh(&graph, &data.train, &toy_cfg, None)?;
    let toy_dev = prepare_fresh(&graph, &data.dev, &toy_cfg, None)?;
    let toy_outcome = train(&toy_cfg, &toy_train, &toy_dev, graph.relation_count())?;
    println!(
        "dev accuracy with co-trained toy scorer: {:.3}",
        toy_outcome.best_dev_accuracy
    );
    Ok(())
}
