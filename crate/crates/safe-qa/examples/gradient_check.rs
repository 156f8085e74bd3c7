//! Verifies the analytic gradients of the full training loss against central
//! finite differences on a random instance, then shows one optimizer step.
//!
//! Run with: cargo run --example gradient_check

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use safe_qa::model::{batch_loss_and_grads, SafeConfig, SafeParameters, TrainExample};
use safe_qa::nn::gradcheck::check_tensors;
use safe_qa::nn::radam::RAdam;
use safe_qa::paths::{NodeRole, PathFeatureSet, SimplifiedPath};
use safe_qa::{train_step, PairId, RelationId};

fn main() -> anyhow::Result<()> {
    let mut rng = ChaCha20Rng::seed_from_u64(7);
    let config = SafeConfig { k: 2, n_relations: 4, hidden_path: 8, hidden_scale: 4 };
    let mut params = SafeParameters::init(config, &mut rng);

    // One two-candidate example with hand-built feature sets.
    let path = |rel: u32, f: u64| {
        (
            SimplifiedPath {
                roles: vec![NodeRole::Question, NodeRole::Answer],
                relations: vec![RelationId(rel)],
            },
            f,
        )
    };
    let feature_sets = vec![
        PathFeatureSet::from_entries(
            PairId { example_id: "e".into(), candidate_index: 0 },
            vec![path(0, 2), path(1, 1)],
            false,
        ),
        PathFeatureSet::from_entries(
            PairId { example_id: "e".into(), candidate_index: 1 },
            vec![path(2, 3)],
            false,
        ),
    ];
    let base_scores: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let example = TrainExample {
        example_id: "e",
        base_scores: &base_scores,
        toy_features: None,
        feature_sets: &feature_sets,
        answer_index: 0,
    };
    let batch = [example];

    let out = batch_loss_and_grads(&params, None, &batch)?;
    println!("loss {:.6}, batch accuracy {}/1", out.loss, out.correct);

    let tensors = vec![
        params.path_encoder.w1.clone(),
        params.path_encoder.b1.clone(),
        params.path_encoder.w2.clone(),
        params.path_encoder.b2.clone(),
        params.scaler.w1.clone(),
        params.scaler.b1.clone(),
        params.scaler.w2.clone(),
        params.scaler.b2.clone(),
    ];
    let analytic = vec![
        out.grads.path_encoder.dw1.clone(),
        out.grads.path_encoder.db1.clone(),
        out.grads.path_encoder.dw2.clone(),
        out.grads.path_encoder.db2.clone(),
        out.grads.scaler.dw1.clone(),
        out.grads.scaler.db1.clone(),
        out.grads.scaler.dw2.clone(),
        out.grads.scaler.db2.clone(),
    ];
    let names = ["pe.w1", "pe.b1", "pe.w2", "pe.b2", "sc.w1", "sc.b1", "sc.w2", "sc.b2"];
    let mut loss = |ts: &[Vec<f64>]| {
        let mut p = params.clone();
        p.path_encoder.w1 = ts[0].clone();
        p.path_encoder.b1 = ts[1].clone();
        p.path_encoder.w2 = ts[2].clone();
        p.path_encoder.b2 = ts[3].clone();
        p.scaler.w1 = ts[4].clone();
        p.scaler.b1 = ts[5].clone();
        p.scaler.w2 = ts[6].clone();
        p.scaler.b2 = ts[7].clone();
        batch_loss_and_grads(&p, None, &batch).expect("loss evaluates").loss
    };
    let report = check_tensors(&mut loss, &tensors, &analytic, &names, 1e-5, 1e-4);
    print!("{report}");
    anyhow::ensure!(report.pass(), "analytic and numeric gradients disagree");

    // One rectified-Adam step strictly lowers the loss on this batch.
    let mut opt = RAdam::new(1e-2);
    let stats = train_step(&mut params, None, &batch, &mut opt, None)?;
    let after = batch_loss_and_grads(&params, None, &batch)?;
    println!("after one step: loss {:.6} -> {:.6}", stats.loss, after.loss);
    Ok(())
}
