//! Converts trained models to and from the named-tensor checkpoint format,
//! carrying enough provenance (graph hash, run config) to refuse mismatched
//! reuse at load time.

use serde_json::json;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::SafeParameters;
use crate::nn::{Checkpoint, NamedTensor};
use crate::ptm::ToyScorer;

use super::config::{Mode, RunConfig};

/// A checkpoint decoded back into model form.
#[derive(Clone, Debug)]
pub struct LoadedModel {
    pub params: SafeParameters,
    pub toy: Option<ToyScorer>,
    pub config: RunConfig,
    pub graph_hash: String,
    pub n_relations: usize,
    pub best_epoch: usize,
    pub best_dev_accuracy: f64,
}

fn push_block(ckpt: &mut Checkpoint, prefix: &str, block: &crate::nn::MlpBlock) {
    ckpt.push(NamedTensor::matrix(
        &format!("{prefix}.w1"),
        block.hidden_dim,
        block.in_dim,
        block.w1.clone(),
    ));
    ckpt.push(NamedTensor::vector(&format!("{prefix}.b1"), block.b1.clone()));
    ckpt.push(NamedTensor::matrix(
        &format!("{prefix}.w2"),
        block.out_dim,
        block.hidden_dim,
        block.w2.clone(),
    ));
    ckpt.push(NamedTensor::vector(&format!("{prefix}.b2"), block.b2.clone()));
}

fn fill_from(ckpt: &Checkpoint, name: &str, dest: &mut Vec<f64>) -> Result<()> {
    let t = ckpt.tensor(name)?;
    if t.data.len() != dest.len() {
        return Err(Error::Dimension {
            what: format!("checkpoint tensor {name:?}"),
            expected: dest.len(),
            got: t.data.len(),
        });
    }
    dest.copy_from_slice(&t.data);
    Ok(())
}

fn fill_block(ckpt: &Checkpoint, prefix: &str, block: &mut crate::nn::MlpBlock) -> Result<()> {
    fill_from(ckpt, &format!("{prefix}.w1"), &mut block.w1)?;
    fill_from(ckpt, &format!("{prefix}.b1"), &mut block.b1)?;
    fill_from(ckpt, &format!("{prefix}.w2"), &mut block.w2)?;
    fill_from(ckpt, &format!("{prefix}.b2"), &mut block.b2)
}

pub fn model_to_checkpoint(
    params: &SafeParameters,
    toy: Option<&ToyScorer>,
    config: &RunConfig,
    graph_hash: &str,
    best_epoch: usize,
    best_dev_accuracy: f64,
) -> Checkpoint {
    let mut ckpt = Checkpoint::new(config.seed, &config.hash());
    ckpt.metadata.insert("graph_hash".into(), json!(graph_hash));
    ckpt.metadata.insert("mode".into(), serde_json::to_value(config.mode).expect("mode"));
    ckpt.metadata
        .insert("run_config".into(), serde_json::to_value(config).expect("config"));
    ckpt.metadata.insert("n_relations".into(), json!(params.config.n_relations));
    ckpt.metadata.insert("best_epoch".into(), json!(best_epoch));
    ckpt.metadata.insert("best_dev_accuracy".into(), json!(best_dev_accuracy));
    push_block(&mut ckpt, "safe.path_encoder", &params.path_encoder);
    push_block(&mut ckpt, "safe.scaler", &params.scaler);
    if let Some(toy) = toy {
        ckpt.push(NamedTensor::vector("toy.feature_weights", toy.feature_weights.clone()));
        push_block(&mut ckpt, "toy.head", &toy.head);
    }
    ckpt
}

fn meta_u64(ckpt: &Checkpoint, key: &str) -> Result<u64> {
    ckpt.metadata
        .get(key)
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Incompatible(format!("checkpoint metadata missing {key:?}")))
}

pub fn model_from_checkpoint(ckpt: &Checkpoint) -> Result<LoadedModel> {
    ckpt.validate()?;
    let config: RunConfig = serde_json::from_value(
        ckpt.metadata
            .get("run_config")
            .cloned()
            .ok_or_else(|| Error::Incompatible("checkpoint metadata missing run_config".into()))?,
    )
    .map_err(|e| Error::Incompatible(format!("checkpoint run_config invalid: {e}")))?;
    if config.hash() != ckpt.config_hash {
        return Err(Error::Incompatible(format!(
            "checkpoint config hash {} does not match its stored config ({})",
            ckpt.config_hash,
            config.hash()
        )));
    }
    let graph_hash = ckpt
        .meta_str("graph_hash")
        .ok_or_else(|| Error::Incompatible("checkpoint metadata missing graph_hash".into()))?
        .to_string();
    let n_relations = meta_u64(ckpt, "n_relations")? as usize;
    let best_epoch = meta_u64(ckpt, "best_epoch")? as usize;
    let best_dev_accuracy = ckpt
        .metadata
        .get("best_dev_accuracy")
        .and_then(|v| v.as_f64())
        .unwrap_or(f64::NAN);

    let mut params = SafeParameters::zeros(config.safe_config(n_relations));
    fill_block(ckpt, "safe.path_encoder", &mut params.path_encoder)?;
    fill_block(ckpt, "safe.scaler", &mut params.scaler)?;

    let toy = if config.mode == Mode::ToyScorer {
        let mut toy = ToyScorer::zeros(config.hidden_toy);
        fill_from(ckpt, "toy.feature_weights", &mut toy.feature_weights)?;
        fill_block(ckpt, "toy.head", &mut toy.head)?;
        Some(toy)
    } else {
        None
    };

    Ok(LoadedModel { params, toy, config, graph_hash, n_relations, best_epoch, best_dev_accuracy })
}

/// Refuses to pair a checkpoint with a graph other than the one it was
/// trained on.
pub fn check_graph_compatibility(model: &LoadedModel, graph: &Graph) -> Result<()> {
    let hash = graph.content_hash();
    if model.graph_hash != hash {
        return Err(Error::Incompatible(format!(
            "checkpoint was trained on graph {} but this graph hashes to {hash}",
            model.graph_hash
        )));
    }
    if model.n_relations != graph.relation_count() {
        return Err(Error::Incompatible(format!(
            "checkpoint expects {} relation types, graph has {}",
            model.n_relations,
            graph.relation_count()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn sample_model(mode: Mode) -> (SafeParameters, Option<ToyScorer>, RunConfig) {
        let mut cfg = RunConfig::default();
        cfg.mode = mode;
        cfg.hidden_path = 6;
        cfg.hidden_scale = 4;
        cfg.hidden_toy = 3;
        let mut rng = ChaCha20Rng::seed_from_u64(42);
        let params = SafeParameters::init(cfg.safe_config(5), &mut rng);
        let toy = match mode {
            Mode::ToyScorer => Some(ToyScorer::init(cfg.hidden_toy, &mut rng)),
            _ => None,
        };
        (params, toy, cfg)
    }

    #[test]
    fn roundtrip_restores_model_exactly() {
        let (params, toy, cfg) = sample_model(Mode::ToyScorer);
        let ckpt = model_to_checkpoint(&params, toy.as_ref(), &cfg, "g0123", 17, 0.75);
        let loaded = model_from_checkpoint(&ckpt).unwrap();
        assert_eq!(loaded.params, params);
        assert_eq!(loaded.toy, toy);
        assert_eq!(loaded.config, cfg);
        assert_eq!(loaded.graph_hash, "g0123");
        assert_eq!(loaded.best_epoch, 17);
        assert_eq!(loaded.best_dev_accuracy, 0.75);
    }

    #[test]
    fn file_roundtrip_is_exact() {
        let (params, _, cfg) = sample_model(Mode::KgOnly);
        let ckpt = model_to_checkpoint(&params, None, &cfg, "gaaaa", 3, 0.5);
        let file = tempfile::NamedTempFile::new().unwrap();
        ckpt.save(file.path()).unwrap();
        let loaded = model_from_checkpoint(&Checkpoint::load(file.path()).unwrap()).unwrap();
        assert_eq!(loaded.params, params);
        assert!(loaded.toy.is_none());
    }

    #[test]
    fn tampered_config_hash_rejected() {
        let (params, _, cfg) = sample_model(Mode::KgOnly);
        let mut ckpt = model_to_checkpoint(&params, None, &cfg, "g", 0, 0.0);
        ckpt.config_hash = "0000000000000000".into();
        assert!(model_from_checkpoint(&ckpt).is_err());
    }

    #[test]
    fn wrong_tensor_shape_rejected() {
        let (params, _, cfg) = sample_model(Mode::KgOnly);
        let mut ckpt = model_to_checkpoint(&params, None, &cfg, "g", 0, 0.0);
        let t = ckpt.tensors.iter_mut().find(|t| t.name == "safe.scaler.b1").unwrap();
        t.data.push(0.0);
        t.shape = vec![t.data.len()];
        assert!(model_from_checkpoint(&ckpt).is_err());
    }

    #[test]
    fn missing_toy_tensors_rejected() {
        let (params, toy, cfg) = sample_model(Mode::ToyScorer);
        let mut ckpt = model_to_checkpoint(&params, toy.as_ref(), &cfg, "g", 0, 0.0);
        ckpt.tensors.retain(|t| t.name != "toy.feature_weights");
        assert!(model_from_checkpoint(&ckpt).is_err());
    }

    #[test]
    fn graph_compatibility_checked_by_hash() {
        let g1 = Graph::from_tsv_str("r\tx\ty\nr\tz\ty\n", true, "t").unwrap();
        let g2 = Graph::from_tsv_str("r\tx\ty\n", true, "t").unwrap();
        let mut cfg = RunConfig::default();
        cfg.mode = Mode::KgOnly;
        let params = SafeParameters::zeros(cfg.safe_config(g1.relation_count()));
        let ckpt = model_to_checkpoint(&params, None, &cfg, &g1.content_hash(), 0, 0.0);
        let loaded = model_from_checkpoint(&ckpt).unwrap();
        check_graph_compatibility(&loaded, &g1).unwrap();
        assert!(check_graph_compatibility(&loaded, &g2).is_err());
    }
}
