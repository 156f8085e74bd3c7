//! The training loop: seeded subsampling, epoch shuffling, batched updates,
//! and best-on-dev selection over the trained epochs (ties go to the earliest
//! epoch; only a zero-epoch run returns the raw initialization).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::model::{train_step, SafeParameters, TrainExample};
use crate::nn::RAdam;
use crate::ptm::ToyScorer;

use super::config::{Mode, RunConfig};
use super::eval::accuracy_counts;
use super::prepare::PreparedExample;

/// Independent RNG streams derived from one run seed.
const STREAM_INIT: u64 = 0;
const STREAM_SUBSAMPLE: u64 = 1;
const STREAM_EPOCH: u64 = 2;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Indices of the training subsample: a prefix of one seeded shuffle of
/// `0..n`, so a larger fraction's subsample contains every smaller one.
/// The prefix length is `max(1, floor(fraction * n))`.
pub fn subsample_indices(n: usize, fraction: f64, seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream_rng(seed, STREAM_SUBSAMPLE));
    let take = ((fraction * n as f64).floor() as usize).clamp(1, n);
    order.truncate(take);
    order
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    /// Mean cross-entropy over the examples seen this epoch.
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub dev_accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Parameters of the dev-best trained epoch; the untouched initialization
    /// only when `epochs` is 0.
    pub params: SafeParameters,
    pub toy: Option<ToyScorer>,
    /// 0 means the initialization itself.
    pub best_epoch: usize,
    pub best_dev_accuracy: f64,
    pub log: Vec<EpochLog>,
    /// Training-set indices actually used after fraction subsampling.
    pub train_indices: Vec<usize>,
}

/// Renders the per-epoch log as a TSV table.
pub fn format_log(log: &[EpochLog]) -> String {
    let mut out = String::from("epoch\ttrain_loss\ttrain_accuracy\tdev_accuracy\n");
    for e in log {
        out.push_str(&format!(
            "{}\t{:.6}\t{:.6}\t{:.6}\n",
            e.epoch, e.train_loss, e.train_accuracy, e.dev_accuracy
        ));
    }
    out
}

fn as_train_example<'a>(ex: &'a PreparedExample) -> Result<TrainExample<'a>> {
    let answer_index = ex.answer_index.ok_or_else(|| {
        Error::Invalid(format!("training example '{}' has no gold answer", ex.id))
    })?;
    Ok(TrainExample {
        example_id: &ex.id,
        base_scores: &ex.base_scores,
        toy_features: ex.toy_features.as_deref(),
        feature_sets: &ex.feature_sets,
        answer_index,
    })
}

pub fn train(
    config: &RunConfig,
    train_set: &[PreparedExample],
    dev_set: &[PreparedExample],
    n_relations: usize,
) -> Result<TrainOutcome> {
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::Invalid("training split is empty".into()));
    }
    if dev_set.is_empty() {
        return Err(Error::Invalid(
            "dev split is empty; checkpoint selection needs dev accuracy".into(),
        ));
    }
    if !dev_set.iter().any(|ex| ex.answer_index.is_some()) {
        return Err(Error::Invalid("dev split has no gold answers".into()));
    }

    let train_indices = subsample_indices(train_set.len(), config.train_fraction, config.seed);
    let subset: Vec<&PreparedExample> = train_indices.iter().map(|&i| &train_set[i]).collect();
    // Fail fast on unlabeled training examples.
    for ex in &subset {
        as_train_example(ex)?;
    }

    let mut init_rng = stream_rng(config.seed, STREAM_INIT);
    let mut params =
        SafeParameters::init(config.safe_config(n_relations), &mut init_rng);
    let mut toy = match config.mode {
        Mode::ToyScorer => Some(ToyScorer::init(config.hidden_toy, &mut init_rng)),
        _ => None,
    };
    let mut kg_opt = RAdam::new(config.kg_lr);
    let mut toy_opt = toy.as_ref().map(|_| RAdam::new(config.toy_lr));

    // Selection considers trained epochs only: an initialization that happens
    // to score well must not shadow an equally good trained model.
    let (c0, a0) = accuracy_counts(&params, toy.as_ref(), dev_set)?;
    let init_dev_accuracy = c0 as f64 / a0 as f64;
    let mut best: Option<(usize, f64)> = None;
    let mut best_params = params.clone();
    let mut best_toy = toy.clone();

    let mut epoch_rng = stream_rng(config.seed, STREAM_EPOCH);
    let mut order: Vec<usize> = (0..subset.len()).collect();
    let mut log = Vec::with_capacity(config.epochs);

    for epoch in 1..=config.epochs {
        order.shuffle(&mut epoch_rng);
        let mut loss_sum = 0.0;
        let mut correct = 0;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<TrainExample> =
                chunk.iter().map(|&i| as_train_example(subset[i])).collect::<Result<_>>()?;
            let stats = train_step(
                &mut params,
                toy.as_mut(),
                &batch,
                &mut kg_opt,
                toy_opt.as_mut(),
            )?;
            loss_sum += stats.loss * batch.len() as f64;
            correct += stats.correct;
        }
        let n = subset.len() as f64;
        let (dc, da) = accuracy_counts(&params, toy.as_ref(), dev_set)?;
        let dev_accuracy = dc as f64 / da as f64;
        log.push(EpochLog {
            epoch,
            train_loss: loss_sum / n,
            train_accuracy: correct as f64 / n,
            dev_accuracy,
        });
        if best.is_none_or(|(_, acc)| dev_accuracy > acc) {
            best = Some((epoch, dev_accuracy));
            best_params = params.clone();
            best_toy = toy.clone();
        }
    }

    let (best_epoch, best_dev_accuracy) = best.unwrap_or((0, init_dev_accuracy));
    Ok(TrainOutcome {
        params: best_params,
        toy: best_toy,
        best_epoch,
        best_dev_accuracy,
        log,
        train_indices,
    })
}
