//! Command-line harness: load graphs, ground datasets, precompute path
//! features, train, evaluate, sweep training fractions, dump path values,
//! generate synthetic data, and report parameter counts.
//!
//! Every subcommand accepts `--config <toml>` plus individual flag
//! overrides, and every produced report carries the config hash.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use safe_qa::harness as h;
use safe_qa::harness::{Mode, RunConfig, ScoresMode};
use safe_qa::nn::Checkpoint;
use safe_qa::ptm::MissingScorePolicy;
use safe_qa::{build_subgraph, ground, Graph};

#[derive(Parser)]
#[command(
    name = "safe-qa",
    about = "Fuse text-model scores with statistical relation-path features from a knowledge graph for multiple-choice QA",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Run configuration: a TOML file plus per-field flag overrides.
#[derive(Args, Clone, Debug, Default)]
struct ConfigArgs {
    /// TOML run configuration file; flags below override its values.
    #[arg(long, global = false)]
    config: Option<PathBuf>,
    /// Hop limit for path extraction (1..=3).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    hidden_path: Option<usize>,
    #[arg(long)]
    hidden_scale: Option<usize>,
    #[arg(long)]
    hidden_toy: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    kg_lr: Option<f64>,
    #[arg(long)]
    toy_lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    train_fraction: Option<f64>,
    /// Per-pair cap on enumerated paths.
    #[arg(long)]
    path_cap: Option<usize>,
    /// Score source: score-file, toy-scorer, or kg-only.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Add reversed edges with inv_-prefixed relation names.
    #[arg(long)]
    augment_inverses: Option<bool>,
    #[arg(long, value_enum)]
    missing_score_policy: Option<MissingScorePolicy>,
}

impl ConfigArgs {
    fn any_override(&self) -> bool {
        self.k.is_some()
            || self.hidden_path.is_some()
            || self.hidden_scale.is_some()
            || self.hidden_toy.is_some()
            || self.batch_size.is_some()
            || self.kg_lr.is_some()
            || self.toy_lr.is_some()
            || self.epochs.is_some()
            || self.seed.is_some()
            || self.train_fraction.is_some()
            || self.path_cap.is_some()
            || self.mode.is_some()
            || self.augment_inverses.is_some()
            || self.missing_score_policy.is_some()
    }

    fn apply(&self, mut cfg: RunConfig) -> Result<RunConfig> {
        macro_rules! take {
            ($field:ident) => {
                if let Some(v) = self.$field {
                    cfg.$field = v;
                }
            };
        }
        take!(k);
        take!(hidden_path);
        take!(hidden_scale);
        take!(hidden_toy);
        take!(batch_size);
        take!(kg_lr);
        take!(toy_lr);
        take!(epochs);
        take!(seed);
        take!(train_fraction);
        take!(path_cap);
        take!(mode);
        take!(augment_inverses);
        take!(missing_score_policy);
        cfg.validate()?;
        Ok(cfg)
    }

    /// File (or defaults) overlaid with the flags; grid warnings to stderr.
    fn resolve(&self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(path) => RunConfig::load(path)
                .with_context(|| format!("loading config {}", path.display()))?,
            None => RunConfig::default(),
        };
        let cfg = self.apply(base)?;
        for warning in cfg.grid_warnings() {
            eprintln!("warning: {warning}");
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Load a graph TSV, print its statistics, and optionally re-serialize it.
    LoadGraph {
        /// Graph TSV: relation<TAB>head<TAB>tail, # comments allowed.
        graph: PathBuf,
        /// Write the canonical TSV serialization here.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Ground a dataset against a graph and report concept/subgraph sizes.
    Ground {
        graph: PathBuf,
        /// JSONL dataset: {"id", "question", "candidates", "answer_index"?}.
        dataset: PathBuf,
        /// Only process the first N examples.
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Extract path features for every pair and store them in a keyed cache.
    /// Rerunning against an up-to-date cache is a no-op.
    PrecomputePaths {
        graph: PathBuf,
        dataset: PathBuf,
        /// Cache file (JSONL with a key header).
        cache: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Train a model and save the best-on-dev checkpoint.
    Train {
        graph: PathBuf,
        /// Training split (JSONL).
        train: PathBuf,
        /// Dev split (JSONL) used for checkpoint selection.
        dev: PathBuf,
        /// Where to write the checkpoint JSON.
        checkpoint: PathBuf,
        /// Score file (JSONL); required in score-file mode.
        #[arg(long)]
        scores: Option<PathBuf>,
        /// Reuse/write the training-split feature cache here.
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Reuse/write the dev-split feature cache here.
        #[arg(long)]
        dev_cache: Option<PathBuf>,
        /// Write the per-epoch log TSV here.
        #[arg(long)]
        log_out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Evaluate a checkpoint on a dataset and print the report.
    Eval {
        graph: PathBuf,
        dataset: PathBuf,
        checkpoint: PathBuf,
        /// Score file (JSONL); required when the checkpoint was trained in
        /// score-file mode.
        #[arg(long)]
        scores: Option<PathBuf>,
        /// Split name recorded in the report.
        #[arg(long, default_value = "eval")]
        split: String,
        /// Reuse/write the feature cache here.
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Train at several training-set fractions (3 seeds each) and print the
    /// accuracy table.
    Sweep {
        graph: PathBuf,
        train: PathBuf,
        dev: PathBuf,
        #[arg(long)]
        scores: Option<PathBuf>,
        /// Comma-separated fractions in (0, 1].
        #[arg(long, value_delimiter = ',', default_values_t = vec![0.05, 0.1, 0.2, 0.5, 0.8, 1.0])]
        fractions: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Print every observed path shape with its learned value, best first.
    DumpPathValues {
        graph: PathBuf,
        /// Dataset whose observed paths form the table rows.
        dataset: PathBuf,
        checkpoint: PathBuf,
        #[arg(long)]
        cache: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Generate a synthetic planted-evidence task (graph + train/dev splits,
    /// optional score file) and audit the construction.
    GenSynth {
        /// Directory to write graph.tsv, train.jsonl, dev.jsonl, scores.jsonl.
        out_dir: PathBuf,
        #[arg(long, default_value_t = 500)]
        n_train: usize,
        #[arg(long, default_value_t = 200)]
        n_dev: usize,
        #[arg(long, default_value_t = 4)]
        n_candidates: usize,
        /// Extra background nodes connected by filler edges.
        #[arg(long, default_value_t = 0)]
        n_background: usize,
        /// Disable planting: the answer gets noise edges like the rest.
        #[arg(long)]
        control: bool,
        /// Score file flavor to emit alongside the data.
        #[arg(long, value_enum, default_value_t = ScoresMode::None)]
        scores: ScoresMode,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Print the parameter-count breakdown for a configuration.
    ReportParams {
        /// Count relations from this graph instead of --n-relations.
        #[arg(long)]
        graph: Option<PathBuf>,
        /// Relation-type count after augmentation (default: the reference
        /// commonsense graph's 36).
        #[arg(long)]
        n_relations: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn load_graph_with(cfg: &RunConfig, path: &Path) -> Result<Graph> {
    let graph = Graph::load(path, cfg.augment_inverses)
        .with_context(|| format!("loading graph {}", path.display()))?;
    Ok(graph)
}

fn load_score_map(
    cfg: &RunConfig,
    scores: Option<&PathBuf>,
) -> Result<Option<BTreeMap<String, Vec<f64>>>> {
    match (cfg.mode, scores) {
        (Mode::ScoreFile, Some(path)) => Ok(Some(
            safe_qa::load_scores(path)
                .with_context(|| format!("loading scores {}", path.display()))?,
        )),
        (Mode::ScoreFile, None) => bail!("score-file mode needs --scores"),
        (_, Some(_)) => bail!("--scores only makes sense in score-file mode"),
        (_, None) => Ok(None),
    }
}

/// Dataset → prepared examples, optionally via a feature cache.
fn prepare_split(
    graph: &Graph,
    cfg: &RunConfig,
    dataset_path: &Path,
    cache: Option<&Path>,
    scores: Option<&BTreeMap<String, Vec<f64>>>,
) -> Result<Vec<h::PreparedExample>> {
    let dataset = h::load_dataset(dataset_path)
        .with_context(|| format!("loading dataset {}", dataset_path.display()))?;
    let (features, reused) = h::load_or_extract_features(graph, &dataset, cfg, cache)?;
    if let Some(path) = cache {
        eprintln!(
            "cache {}: {}",
            path.display(),
            if reused { "reused" } else { "rebuilt" }
        );
    }
    Ok(h::prepare_examples(graph, &dataset, features, cfg, scores)?)
}

fn cmd_load_graph(graph: &Path, out: Option<&Path>, config: &ConfigArgs) -> Result<()> {
    let cfg = config.resolve()?;
    let g = load_graph_with(&cfg, graph)?;
    println!("# config_hash\t{}", cfg.hash());
    println!("graph_hash\t{}", g.content_hash());
    println!("nodes\t{}", g.node_count());
    println!("relations\t{}", g.relation_count());
    println!("edges\t{}", g.edge_count());
    println!("duplicates_skipped\t{}", g.duplicates_skipped());
    println!("augmented\t{}", g.augmented());
    if let Some(path) = out {
        g.write_tsv(path)?;
        eprintln!("wrote canonical TSV to {}", path.display());
    }
    Ok(())
}

fn cmd_ground(
    graph: &Path,
    dataset: &Path,
    limit: Option<usize>,
    out: Option<&Path>,
    config: &ConfigArgs,
) -> Result<()> {
    let cfg = config.resolve()?;
    let g = load_graph_with(&cfg, graph)?;
    let examples = h::load_dataset(dataset)?;
    let n = limit.unwrap_or(examples.len()).min(examples.len());
    let mut text = format!("# config_hash\t{}\n", cfg.hash());
    text.push_str("id\tcandidate\tquestion_concepts\tcandidate_concepts\tsubgraph_nodes\tsubgraph_edges\n");
    for ex in &examples[..n] {
        let grounded = ground(&g, &ex.id, &ex.question, &ex.candidates, ex.answer_index)?;
        for ci in 0..ex.candidates.len() {
            let sub = build_subgraph(&g, &grounded, ci, cfg.k)?;
            text.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\n",
                ex.id,
                ci,
                grounded.question_concepts.len(),
                grounded.candidate_concepts[ci].len(),
                sub.node_count(),
                sub.edge_count()
            ));
        }
    }
    write_or_print(out, &text)
}

fn cmd_precompute(graph: &Path, dataset: &Path, cache: &Path, config: &ConfigArgs) -> Result<()> {
    let cfg = config.resolve()?;
    let g = load_graph_with(&cfg, graph)?;
    let examples = h::load_dataset(dataset)?;
    let key = h::cache_key(&g, &examples, &cfg);
    if h::cache_matches(cache, &key) {
        println!("# config_hash\t{}", cfg.hash());
        println!("cache\tup-to-date");
        return Ok(());
    }
    let features = h::extract_features(&g, &examples, cfg.k, cfg.path_cap)?;
    h::write_cache(cache, &key, &features)?;
    let truncated = features.iter().filter(|f| f.truncated).count();
    let distinct: usize = features.iter().map(|f| f.distinct_paths()).sum();
    println!("# config_hash\t{}", cfg.hash());
    println!("cache\twritten");
    println!("pairs\t{}", features.len());
    println!("distinct_path_entries\t{distinct}");
    println!("truncated_pairs\t{truncated}");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    graph: &Path,
    train: &Path,
    dev: &Path,
    checkpoint: &Path,
    scores: Option<&PathBuf>,
    cache: Option<&Path>,
    dev_cache: Option<&Path>,
    log_out: Option<&Path>,
    config: &ConfigArgs,
) -> Result<()> {
    let cfg = config.resolve()?;
    let g = load_graph_with(&cfg, graph)?;
    let score_map = load_score_map(&cfg, scores)?;
    let train_set = prepare_split(&g, &cfg, train, cache, score_map.as_ref())?;
    let dev_set = prepare_split(&g, &cfg, dev, dev_cache, score_map.as_ref())?;
    let outcome = h::train(&cfg, &train_set, &dev_set, g.relation_count())?;
    let ckpt = h::model_to_checkpoint(
        &outcome.params,
        outcome.toy.as_ref(),
        &cfg,
        &g.content_hash(),
        outcome.best_epoch,
        outcome.best_dev_accuracy,
    );
    ckpt.save(checkpoint)?;
    if let Some(path) = log_out {
        let text = format!("# config_hash\t{}\n{}", cfg.hash(), h::format_log(&outcome.log));
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    println!("# config_hash\t{}", cfg.hash());
    println!("train_examples_used\t{}", outcome.train_indices.len());
    println!("best_epoch\t{}", outcome.best_epoch);
    println!("best_dev_accuracy\t{:.6}", outcome.best_dev_accuracy);
    println!("checkpoint\t{}", checkpoint.display());
    Ok(())
}

/// Loads a checkpoint and pins the run configuration to the one it was
/// trained with. Only settings that do not change the model or its features
/// may be overridden at evaluation time.
fn checkpoint_config(args: &ConfigArgs, ckpt: &Checkpoint) -> Result<(h::LoadedModel, RunConfig)> {
    let model = h::model_from_checkpoint(ckpt)?;
    let mut cfg = model.config.clone();
    if args.config.is_some() || args.any_override() {
        let requested = args.resolve()?;
        let mut pinned = requested.clone();
        pinned.missing_score_policy = cfg.missing_score_policy;
        let mut relaxed = cfg.clone();
        relaxed.missing_score_policy = requested.missing_score_policy;
        if pinned != cfg {
            bail!(
                "this configuration is fixed by the checkpoint (only missing-score-policy may be overridden at evaluation time)"
            );
        }
        cfg = relaxed;
    }
    Ok((model, cfg))
}

#[allow(clippy::too_many_arguments)]
fn cmd_eval(
    graph: &Path,
    dataset: &Path,
    checkpoint: &Path,
    scores: Option<&PathBuf>,
    split: &str,
    cache: Option<&Path>,
    out: Option<&Path>,
    config: &ConfigArgs,
) -> Result<()> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let (model, cfg) = checkpoint_config(config, &ckpt)?;
    let g = load_graph_with(&cfg, graph)?;
    h::check_graph_compatibility(&model, &g)?;
    let score_map = load_score_map(&cfg, scores)?;
    let examples = prepare_split(&g, &cfg, dataset, cache, score_map.as_ref())?;
    let report = h::evaluate(&model.params, model.toy.as_ref(), &examples, split, &cfg.hash())?;
    write_or_print(out, &h::format_report(&report))
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    graph: &Path,
    train: &Path,
    dev: &Path,
    scores: Option<&PathBuf>,
    fractions: &[f64],
    out: Option<&Path>,
    config: &ConfigArgs,
) -> Result<()> {
    let cfg = config.resolve()?;
    for warning in h::fraction_warnings(fractions) {
        eprintln!("warning: {warning}");
    }
    let g = load_graph_with(&cfg, graph)?;
    let score_map = load_score_map(&cfg, scores)?;
    let train_set = prepare_split(&g, &cfg, train, None, score_map.as_ref())?;
    let dev_set = prepare_split(&g, &cfg, dev, None, score_map.as_ref())?;
    let rows = h::sweep(&cfg, &train_set, &dev_set, fractions, g.relation_count())?;
    write_or_print(out, &h::format_sweep(&rows, cfg.seed, &cfg.hash()))
}

fn cmd_dump_path_values(
    graph: &Path,
    dataset: &Path,
    checkpoint: &Path,
    cache: Option<&Path>,
    out: Option<&Path>,
    config: &ConfigArgs,
) -> Result<()> {
    let ckpt = Checkpoint::load(checkpoint)?;
    let (model, cfg) = checkpoint_config(config, &ckpt)?;
    let g = load_graph_with(&cfg, graph)?;
    h::check_graph_compatibility(&model, &g)?;
    // Scores never affect path values; prepare in kg-only form.
    let mut fs_cfg = cfg.clone();
    fs_cfg.mode = Mode::KgOnly;
    let examples = prepare_split(&g, &fs_cfg, dataset, cache, None)?;
    let vocabulary = h::collect_vocabulary(&examples);
    let table = safe_qa::dump_path_values(&model.params, &vocabulary, &g.relation_names())?;
    let text = format!("# config_hash\t{}\n{table}", cfg.hash());
    write_or_print(out, &text)
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen_synth(
    out_dir: &Path,
    n_train: usize,
    n_dev: usize,
    n_candidates: usize,
    n_background: usize,
    control: bool,
    scores: ScoresMode,
    config: &ConfigArgs,
) -> Result<()> {
    let cfg = config.resolve()?;
    let spec = h::SynthSpec {
        n_train,
        n_dev,
        n_candidates,
        n_background,
        planted: !control,
        seed: cfg.seed,
        scores,
    };
    let data = h::generate(&spec)?;
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let graph_path = out_dir.join("graph.tsv");
    fs::write(&graph_path, &data.graph_tsv)?;
    h::save_dataset(out_dir.join("train.jsonl"), &data.train)?;
    h::save_dataset(out_dir.join("dev.jsonl"), &data.dev)?;
    if let Some(records) = &data.scores {
        safe_qa::save_scores(out_dir.join("scores.jsonl"), records)?;
    }

    // Audit the construction by re-extracting features.
    let graph = Graph::load(&graph_path, cfg.augment_inverses)?;
    let all: Vec<_> = data.train.iter().chain(&data.dev).cloned().collect();
    h::verify_planting(&graph, &all, cfg.k, cfg.path_cap, spec.planted)?;

    println!("# config_hash\t{}", cfg.hash());
    println!("out_dir\t{}", out_dir.display());
    println!("graph_hash\t{}", graph.content_hash());
    println!("train_examples\t{}", data.train.len());
    println!("dev_examples\t{}", data.dev.len());
    println!("planted\t{}", spec.planted);
    println!("self_check\tok");
    Ok(())
}

fn cmd_report_params(
    graph: Option<&PathBuf>,
    n_relations: Option<usize>,
    out: Option<&Path>,
    config: &ConfigArgs,
) -> Result<()> {
    let cfg = config.resolve()?;
    let n_relations = match (graph, n_relations) {
        (Some(_), Some(_)) => bail!("pass either --graph or --n-relations, not both"),
        (Some(path), None) => load_graph_with(&cfg, path)?.relation_count(),
        (None, Some(n)) => n,
        (None, None) => h::DEFAULT_N_RELATIONS,
    };
    let report = h::param_report(&cfg, n_relations)?;
    write_or_print(out, &h::format_param_report(&report, &cfg.hash()))
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match &cli.command {
        Command::LoadGraph { graph, out, config } => {
            cmd_load_graph(graph, out.as_deref(), config)
        }
        Command::Ground { graph, dataset, limit, out, config } => {
            cmd_ground(graph, dataset, *limit, out.as_deref(), config)
        }
        Command::PrecomputePaths { graph, dataset, cache, config } => {
            cmd_precompute(graph, dataset, cache, config)
        }
        Command::Train {
            graph,
            train,
            dev,
            checkpoint,
            scores,
            cache,
            dev_cache,
            log_out,
            config,
        } => cmd_train(
            graph,
            train,
            dev,
            checkpoint,
            scores.as_ref(),
            cache.as_deref(),
            dev_cache.as_deref(),
            log_out.as_deref(),
            config,
        ),
        Command::Eval { graph, dataset, checkpoint, scores, split, cache, out, config } => {
            cmd_eval(
                graph,
                dataset,
                checkpoint,
                scores.as_ref(),
                split,
                cache.as_deref(),
                out.as_deref(),
                config,
            )
        }
        Command::Sweep { graph, train, dev, scores, fractions, out, config } => {
            cmd_sweep(graph, train, dev, scores.as_ref(), fractions, out.as_deref(), config)
        }
        Command::DumpPathValues { graph, dataset, checkpoint, cache, out, config } => {
            cmd_dump_path_values(graph, dataset, checkpoint, cache.as_deref(), out.as_deref(), config)
        }
        Command::GenSynth {
            out_dir,
            n_train,
            n_dev,
            n_candidates,
            n_background,
            control,
            scores,
            config,
        } => cmd_gen_synth(
            out_dir,
            *n_train,
            *n_dev,
            *n_candidates,
            *n_background,
            *control,
            *scores,
            config,
        ),
        Command::ReportParams { graph, n_relations, out, config } => {
            cmd_report_params(graph.as_ref(), *n_relations, out.as_deref(), config)
        }
    }
}
