//! The knowledge-graph scorer and its training step.
//!
//! Per candidate: every distinct simplified path p gets a scalar value
//! x_p from the path encoder; the aggregate x_agg = Σ x_p·f_p weighs values
//! by path frequency; a scaling head maps x_agg to S_KG; the fused score is
//! S = S_PTM + S_KG, normalized over candidates by softmax. Training
//! minimizes mean cross-entropy with exact analytic gradients.

use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codec;
use crate::error::{Error, Result};
use crate::nn::mlp::{MlpBlock, MlpCache, MlpGrads};
use crate::nn::radam::RAdam;
use crate::paths::{PathFeatureSet, SimplifiedPath};
use crate::ptm::{ToyGrads, ToyScorer, TOY_FEATURES};

/// Architecture of the KG encoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SafeConfig {
    /// Hop limit used for extraction and encoding.
    pub k: usize,
    /// Relation vocabulary size |R| (after any inverse augmentation).
    pub n_relations: usize,
    /// Hidden width of the path encoder.
    pub hidden_path: usize,
    /// Hidden width of the scaling head.
    pub hidden_scale: usize,
}

impl SafeConfig {
    /// One-hot path vector dimension D.
    pub fn input_dim(&self) -> usize {
        codec::dim(self.k, self.n_relations)
    }
}

/// All trainable KG-encoder parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SafeParameters {
    pub config: SafeConfig,
    /// D → h → 1.
    pub path_encoder: MlpBlock,
    /// 1 → h' → 1.
    pub scaler: MlpBlock,
}

impl SafeParameters {
    pub fn zeros(config: SafeConfig) -> SafeParameters {
        SafeParameters {
            config,
            path_encoder: MlpBlock::zeros(config.input_dim(), config.hidden_path, 1),
            scaler: MlpBlock::zeros(1, config.hidden_scale, 1),
        }
    }

    /// Seed-deterministic init; the path encoder consumes the RNG before
    /// the scaler, which is part of the reproducibility contract.
    pub fn init(config: SafeConfig, rng: &mut impl Rng) -> SafeParameters {
        SafeParameters {
            config,
            path_encoder: MlpBlock::init(config.input_dim(), config.hidden_path, 1, rng),
            scaler: MlpBlock::init(1, config.hidden_scale, 1, rng),
        }
    }

    pub fn param_count(&self) -> usize {
        self.path_encoder.param_count() + self.scaler.param_count()
    }

    /// x_p: the encoder's scalar value for one simplified path.
    pub fn score_path(&self, p: &SimplifiedPath) -> Result<f64> {
        Ok(self.score_path_cached(p)?.0)
    }

    fn score_path_cached(&self, p: &SimplifiedPath) -> Result<(f64, MlpCache)> {
        let v = codec::encode(p, self.config.k, self.config.n_relations)?;
        let (y, cache) = self.path_encoder.forward(&v)?;
        Ok((y[0], cache))
    }

    /// x_agg = Σ x_p·f_p, summed in canonical path order so the result is
    /// reproducible in floating point. Empty sets aggregate to 0.
    pub fn aggregate(&self, fs: &PathFeatureSet) -> Result<f64> {
        let mut acc = 0.0;
        for (p, &f) in &fs.entries {
            acc += self.score_path(p)? * f as f64;
        }
        Ok(acc)
    }

    /// S_KG = scaler(x_agg).
    pub fn score_kg(&self, fs: &PathFeatureSet) -> Result<f64> {
        let x_agg = self.aggregate(fs)?;
        let (y, _) = self.scaler.forward(&[x_agg])?;
        Ok(y[0])
    }
}

/// Full scoring breakdown for one candidate.
#[derive(Clone, Debug)]
pub struct CandidateScore {
    pub s_ptm: f64,
    pub s_kg: f64,
    /// s_ptm + s_kg, computed with that exact addition.
    pub s_total: f64,
    pub x_agg: f64,
    /// x_p for each distinct path in the candidate's feature set.
    pub path_values: BTreeMap<SimplifiedPath, f64>,
}

/// Numerically stable softmax (max-subtracted).
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

/// Lowest-index argmax; the flag reports whether the maximum was tied.
pub fn argmax_with_tie(scores: &[f64]) -> (usize, bool) {
    let mut best = 0;
    let mut tie = false;
    for i in 1..scores.len() {
        if scores[i] > scores[best] {
            best = i;
            tie = false;
        } else if scores[i] == scores[best] {
            tie = true;
        }
    }
    (best, tie)
}

/// Scores every candidate of one example and normalizes over candidates.
/// `ptm_scores[i]` is the text-model score S_PTM for candidate i.
pub fn score_candidates(
    params: &SafeParameters,
    ptm_scores: &[f64],
    feature_sets: &[PathFeatureSet],
) -> Result<(Vec<CandidateScore>, Vec<f64>)> {
    if ptm_scores.len() != feature_sets.len() {
        return Err(Error::Dimension {
            what: "candidate scores".into(),
            expected: feature_sets.len(),
            got: ptm_scores.len(),
        });
    }
    if feature_sets.len() < 2 {
        return Err(Error::Invalid("scoring needs at least 2 candidates".into()));
    }
    let mut detail = Vec::with_capacity(feature_sets.len());
    for (i, fs) in feature_sets.iter().enumerate() {
        let mut path_values = BTreeMap::new();
        let mut x_agg = 0.0;
        for (p, &f) in &fs.entries {
            let x = params.score_path(p)?;
            x_agg += x * f as f64;
            path_values.insert(p.clone(), x);
        }
        let (y, _) = params.scaler.forward(&[x_agg])?;
        let s_kg = y[0];
        let s_ptm = ptm_scores[i];
        detail.push(CandidateScore { s_ptm, s_kg, s_total: s_ptm + s_kg, x_agg, path_values });
    }
    let totals: Vec<f64> = detail.iter().map(|c| c.s_total).collect();
    let probs = softmax(&totals);
    Ok((detail, probs))
}

/// One training example: per-candidate text scores (constants), optional
/// per-candidate lexical features for the co-trained toy scorer, and the
/// per-candidate path feature sets.
#[derive(Clone, Debug)]
pub struct TrainExample<'a> {
    pub example_id: &'a str,
    pub base_scores: &'a [f64],
    pub toy_features: Option<&'a [[f64; TOY_FEATURES]]>,
    pub feature_sets: &'a [PathFeatureSet],
    pub answer_index: usize,
}

/// Gradients for every KG-encoder tensor.
#[derive(Clone, Debug)]
pub struct SafeGrads {
    pub path_encoder: MlpGrads,
    pub scaler: MlpGrads,
}

impl SafeGrads {
    pub fn zeros(params: &SafeParameters) -> SafeGrads {
        SafeGrads {
            path_encoder: MlpGrads::zeros(&params.path_encoder),
            scaler: MlpGrads::zeros(&params.scaler),
        }
    }
}

/// Loss, gradients, and batch accuracy from one forward/backward pass.
#[derive(Clone, Debug)]
pub struct BatchOutput {
    /// Mean cross-entropy over the batch.
    pub loss: f64,
    pub grads: SafeGrads,
    /// Present iff a toy scorer was supplied.
    pub toy_grads: Option<ToyGrads>,
    /// Examples whose fused-score argmax hits the answer (ties → index 0 rule).
    pub correct: usize,
}

fn validate_example(ex: &TrainExample) -> Result<()> {
    let n = ex.feature_sets.len();
    if n < 2 {
        return Err(Error::Invalid(format!(
            "example {:?} needs at least 2 candidates",
            ex.example_id
        )));
    }
    if ex.base_scores.len() != n {
        return Err(Error::Dimension {
            what: format!("base scores of example {:?}", ex.example_id),
            expected: n,
            got: ex.base_scores.len(),
        });
    }
    if let Some(tf) = ex.toy_features {
        if tf.len() != n {
            return Err(Error::Dimension {
                what: format!("toy features of example {:?}", ex.example_id),
                expected: n,
                got: tf.len(),
            });
        }
    }
    if ex.answer_index >= n {
        return Err(Error::Invalid(format!(
            "example {:?} answer_index {} out of range",
            ex.example_id, ex.answer_index
        )));
    }
    Ok(())
}

/// Mean cross-entropy and exact gradients over a batch.
///
/// Each distinct simplified path in the batch runs through the path encoder
/// exactly once; its upstream gradient coefficients are accumulated across
/// all candidates before a single backward pass per path, in canonical path
/// order.
pub fn batch_loss_and_grads(
    params: &SafeParameters,
    toy: Option<&ToyScorer>,
    batch: &[TrainExample],
) -> Result<BatchOutput> {
    if batch.is_empty() {
        return Err(Error::Invalid("empty batch".into()));
    }
    for ex in batch {
        validate_example(ex)?;
    }

    // Forward every distinct path once.
    let mut path_fwd: BTreeMap<&SimplifiedPath, (f64, MlpCache)> = BTreeMap::new();
    for ex in batch {
        for fs in ex.feature_sets {
            for p in fs.entries.keys() {
                if !path_fwd.contains_key(p) {
                    path_fwd.insert(p, params.score_path_cached(p)?);
                }
            }
        }
    }

    let inv_batch = 1.0 / batch.len() as f64;
    let mut loss_sum = 0.0;
    let mut correct = 0;
    let mut bad_ids: Vec<String> = Vec::new();
    let mut grads = SafeGrads::zeros(params);
    let mut toy_grads = toy.map(ToyGrads::zeros);
    let mut path_coef: BTreeMap<&SimplifiedPath, f64> = BTreeMap::new();

    for ex in batch {
        let n = ex.feature_sets.len();
        let mut totals = Vec::with_capacity(n);
        let mut scaler_caches = Vec::with_capacity(n);
        let mut toy_caches = Vec::with_capacity(n);
        for i in 0..n {
            let mut x_agg = 0.0;
            for (p, &f) in &ex.feature_sets[i].entries {
                x_agg += path_fwd[p].0 * f as f64;
            }
            let (y, cache) = params.scaler.forward(&[x_agg])?;
            let s_kg = y[0];
            scaler_caches.push(cache);
            let mut s_ptm = ex.base_scores[i];
            if let (Some(t), Some(tf)) = (toy, ex.toy_features) {
                let (ty, tcache) = t.score(tf[i])?;
                s_ptm += ty;
                toy_caches.push(Some(tcache));
            } else {
                toy_caches.push(None);
            }
            totals.push(s_ptm + s_kg);
        }

        let probs = softmax(&totals);
        let p_ans = probs[ex.answer_index];
        let ex_loss = -p_ans.ln();
        if !ex_loss.is_finite() {
            bad_ids.push(ex.example_id.to_string());
            continue;
        }
        loss_sum += ex_loss;
        if argmax_with_tie(&totals).0 == ex.answer_index {
            correct += 1;
        }

        for i in 0..n {
            let ds = (probs[i] - if i == ex.answer_index { 1.0 } else { 0.0 }) * inv_batch;
            let sg = params.scaler.backward(&scaler_caches[i], &[ds])?;
            grads.scaler.accumulate(&sg);
            let dx_agg = sg.dx[0];
            for (p, &f) in &ex.feature_sets[i].entries {
                *path_coef.entry(p).or_insert(0.0) += dx_agg * f as f64;
            }
            if let (Some(t), Some(Some(tcache))) = (toy, toy_caches.get(i)) {
                let tg = t.backward(tcache, ds)?;
                toy_grads.as_mut().expect("toy grads allocated").accumulate(&tg);
            }
        }
    }

    if !bad_ids.is_empty() {
        return Err(Error::NonFinite { what: "training loss".into(), example_ids: bad_ids });
    }

    for (p, coef) in path_coef {
        if coef == 0.0 {
            continue;
        }
        let (_, cache) = &path_fwd[p];
        let pg = params.path_encoder.backward(cache, &[coef])?;
        grads.path_encoder.accumulate(&pg);
    }

    Ok(BatchOutput { loss: loss_sum * inv_batch, grads, toy_grads, correct })
}

/// Loss and accuracy on one training step.
#[derive(Clone, Copy, Debug)]
pub struct StepStats {
    pub loss: f64,
    pub correct: usize,
}

/// One optimizer update over a batch. The KG encoder and the optional toy
/// scorer use separate optimizers (they train at different learning rates).
pub fn train_step(
    params: &mut SafeParameters,
    toy: Option<&mut ToyScorer>,
    batch: &[TrainExample],
    opt: &mut RAdam,
    toy_opt: Option<&mut RAdam>,
) -> Result<StepStats> {
    let out = batch_loss_and_grads(params, toy.as_deref(), batch)?;
    let g = &out.grads;
    opt.step(
        &mut [
            &mut params.path_encoder.w1,
            &mut params.path_encoder.b1,
            &mut params.path_encoder.w2,
            &mut params.path_encoder.b2,
            &mut params.scaler.w1,
            &mut params.scaler.b1,
            &mut params.scaler.w2,
            &mut params.scaler.b2,
        ],
        &[
            &g.path_encoder.dw1,
            &g.path_encoder.db1,
            &g.path_encoder.dw2,
            &g.path_encoder.db2,
            &g.scaler.dw1,
            &g.scaler.db1,
            &g.scaler.dw2,
            &g.scaler.db2,
        ],
    )?;
    if let (Some(t), Some(to), Some(tg)) = (toy, toy_opt, out.toy_grads.as_ref()) {
        to.step(
            &mut [
                &mut t.feature_weights,
                &mut t.head.w1,
                &mut t.head.b1,
                &mut t.head.w2,
                &mut t.head.b2,
            ],
            &[
                &tg.d_feature_weights,
                &tg.d_head.dw1,
                &tg.d_head.db1,
                &tg.d_head.dw2,
                &tg.d_head.db2,
            ],
        )?;
    }
    Ok(StepStats { loss: out.loss, correct: out.correct })
}

/// Smallest |hidden preactivation| across every MLP evaluation the batch
/// loss performs. Gradient checks resample instances while this is below a
/// threshold to stay away from ReLU kinks.
pub fn min_abs_preactivation(
    params: &SafeParameters,
    toy: Option<&ToyScorer>,
    batch: &[TrainExample],
) -> Result<f64> {
    fn fold_min(min_abs: &mut f64, z1: &[f64]) {
        for z in z1 {
            *min_abs = min_abs.min(z.abs());
        }
    }
    let mut min_abs = f64::INFINITY;
    let mut path_vals: BTreeMap<&SimplifiedPath, f64> = BTreeMap::new();
    for ex in batch {
        validate_example(ex)?;
        for fs in ex.feature_sets {
            for p in fs.entries.keys() {
                if !path_vals.contains_key(p) {
                    let (x, cache) = params.score_path_cached(p)?;
                    fold_min(&mut min_abs, &cache.z1);
                    path_vals.insert(p, x);
                }
            }
        }
    }
    for ex in batch {
        for (i, fs) in ex.feature_sets.iter().enumerate() {
            let mut x_agg = 0.0;
            for (p, &f) in &fs.entries {
                x_agg += path_vals[p] * f as f64;
            }
            let (_, cache) = params.scaler.forward(&[x_agg])?;
            fold_min(&mut min_abs, &cache.z1);
            if let (Some(t), Some(tf)) = (toy, ex.toy_features) {
                let (_, tcache) = t.score(tf[i])?;
                fold_min(&mut min_abs, tcache.head_z1());
            }
        }
    }
    Ok(min_abs)
}

/// Renders one path as `role-role-…|relation-relation-…`.
pub fn format_path(p: &SimplifiedPath, relation_names: &[String]) -> Result<String> {
    let roles: Vec<String> = p.roles.iter().map(|r| r.as_u8().to_string()).collect();
    let rels: Result<Vec<String>> = p
        .relations
        .iter()
        .map(|r| {
            relation_names
                .get(r.0 as usize)
                .cloned()
                .ok_or_else(|| Error::Invalid(format!("relation id {} has no name", r.0)))
        })
        .collect();
    Ok(format!("{}|{}", roles.join("-"), rels?.join("-")))
}

/// Emits the precomputable path-value table: one `path<TAB>value` row per
/// vocabulary entry, sorted by value descending with ties in canonical path
/// order, values fixed at 6 decimals.
pub fn dump_path_values(
    params: &SafeParameters,
    vocabulary: &BTreeSet<SimplifiedPath>,
    relation_names: &[String],
) -> Result<String> {
    let mut rows: Vec<(&SimplifiedPath, f64)> = Vec::with_capacity(vocabulary.len());
    for p in vocabulary {
        rows.push((p, params.score_path(p)?));
    }
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let mut out = String::new();
    for (p, x) in rows {
        out.push_str(&format!("{}\t{x:.6}\n", format_path(p, relation_names)?));
    }
    Ok(out)
}
