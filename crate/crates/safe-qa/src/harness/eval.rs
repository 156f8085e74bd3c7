//! Deterministic evaluation: fused scores, lowest-index argmax on ties, and a
//! reproducible TSV report.

use crate::error::{Error, Result};
use crate::model::{argmax_with_tie, score_candidates, SafeParameters};
use crate::ptm::ToyScorer;

use super::prepare::PreparedExample;

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionRow {
    pub id: String,
    pub predicted: usize,
    pub answer: Option<usize>,
    /// The top score was shared by several candidates.
    pub tie: bool,
    /// Some candidate's path enumeration hit the cap.
    pub truncated: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub split: String,
    pub config_hash: String,
    pub n_examples: usize,
    /// Examples carrying a gold answer; the accuracy denominator.
    pub n_answered: usize,
    pub correct: usize,
    pub accuracy: f64,
    pub tie_count: usize,
    pub truncated_pairs: usize,
    pub kg_param_count: usize,
    pub rows: Vec<PredictionRow>,
}

/// Base text score plus the toy scorer's output when one is in play.
fn fused_base_scores(toy: Option<&ToyScorer>, ex: &PreparedExample) -> Result<Vec<f64>> {
    match (toy, ex.toy_features.as_ref()) {
        (Some(scorer), Some(features)) => {
            let mut out = Vec::with_capacity(ex.base_scores.len());
            for (base, feats) in ex.base_scores.iter().zip(features) {
                out.push(base + scorer.score(*feats)?.0);
            }
            Ok(out)
        }
        (None, None) => Ok(ex.base_scores.clone()),
        (Some(_), None) => Err(Error::Invalid(
            "toy scorer supplied but examples carry no lexical features".into(),
        )),
        (None, Some(_)) => Err(Error::Invalid(
            "examples carry lexical features but no toy scorer was supplied".into(),
        )),
    }
}

/// Predicts one example; returns (predicted, tie).
pub fn predict(
    params: &SafeParameters,
    toy: Option<&ToyScorer>,
    ex: &PreparedExample,
) -> Result<(usize, bool)> {
    let base = fused_base_scores(toy, ex)?;
    let (scored, _) = score_candidates(params, &base, &ex.feature_sets)?;
    let totals: Vec<f64> = scored.iter().map(|c| c.s_total).collect();
    Ok(argmax_with_tie(&totals))
}

/// Correct/answered counts without building a report; used per-epoch.
pub fn accuracy_counts(
    params: &SafeParameters,
    toy: Option<&ToyScorer>,
    examples: &[PreparedExample],
) -> Result<(usize, usize)> {
    let mut correct = 0;
    let mut answered = 0;
    for ex in examples {
        let (predicted, _) = predict(params, toy, ex)?;
        if let Some(ans) = ex.answer_index {
            answered += 1;
            if predicted == ans {
                correct += 1;
            }
        }
    }
    Ok((correct, answered))
}

pub fn evaluate(
    params: &SafeParameters,
    toy: Option<&ToyScorer>,
    examples: &[PreparedExample],
    split: &str,
    config_hash: &str,
) -> Result<EvalReport> {
    let mut rows = Vec::with_capacity(examples.len());
    let mut correct = 0;
    let mut answered = 0;
    let mut tie_count = 0;
    let mut truncated_pairs = 0;
    for ex in examples {
        let (predicted, tie) = predict(params, toy, ex)?;
        if tie {
            tie_count += 1;
        }
        truncated_pairs += ex.feature_sets.iter().filter(|fs| fs.truncated).count();
        if let Some(ans) = ex.answer_index {
            answered += 1;
            if predicted == ans {
                correct += 1;
            }
        }
        rows.push(PredictionRow {
            id: ex.id.clone(),
            predicted,
            answer: ex.answer_index,
            tie,
            truncated: ex.any_truncated(),
        });
    }
    let accuracy = if answered == 0 { 0.0 } else { correct as f64 / answered as f64 };
    Ok(EvalReport {
        split: split.to_string(),
        config_hash: config_hash.to_string(),
        n_examples: examples.len(),
        n_answered: answered,
        correct,
        accuracy,
        tie_count,
        truncated_pairs,
        kg_param_count: params.param_count(),
        rows,
    })
}

/// Renders the report as TSV: a `#`-prefixed key/value preamble followed by
/// one prediction row per example. Identical reports produce identical bytes.
pub fn format_report(r: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!("# split\t{}\n", r.split));
    out.push_str(&format!("# config_hash\t{}\n", r.config_hash));
    out.push_str(&format!("# n_examples\t{}\n", r.n_examples));
    out.push_str(&format!("# n_answered\t{}\n", r.n_answered));
    out.push_str(&format!("# correct\t{}\n", r.correct));
    out.push_str(&format!("# accuracy\t{:.6}\n", r.accuracy));
    out.push_str(&format!("# ties\t{}\n", r.tie_count));
    out.push_str(&format!("# truncated_pairs\t{}\n", r.truncated_pairs));
    out.push_str(&format!("# kg_param_count\t{}\n", r.kg_param_count));
    out.push_str("id\tpredicted\tanswer\tcorrect\ttie\ttruncated\n");
    for row in &r.rows {
        let answer = row.answer.map_or("-".to_string(), |a| a.to_string());
        let correct = row.answer.map_or("-".to_string(), |a| u8::from(row.predicted == a).to_string());
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            row.id,
            row.predicted,
            answer,
            correct,
            u8::from(row.tie),
            u8::from(row.truncated)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ground::PairId;
    use crate::model::SafeConfig;
    use crate::paths::PathFeatureSet;

    fn empty_example(id: &str, base: Vec<f64>, answer: Option<usize>) -> PreparedExample {
        let feature_sets = (0..base.len())
            .map(|ci| {
                PathFeatureSet::empty(PairId { example_id: id.to_string(), candidate_index: ci })
            })
            .collect();
        PreparedExample {
            id: id.to_string(),
            answer_index: answer,
            base_scores: base,
            toy_features: None,
            feature_sets,
        }
    }

    fn zero_params() -> SafeParameters {
        SafeParameters::zeros(SafeConfig { k: 2, n_relations: 2, hidden_path: 4, hidden_scale: 4 })
    }

    #[test]
    fn argmax_on_fused_scores_with_tie_to_lowest() {
        let params = zero_params();
        let examples = vec![
            empty_example("a", vec![0.1, 0.9, 0.3], Some(1)),
            empty_example("b", vec![0.5, 0.5], Some(1)),
            empty_example("c", vec![0.2, 0.7], None),
        ];
        let report = evaluate(&params, None, &examples, "dev", "deadbeef").unwrap();
        assert_eq!(report.n_examples, 3);
        assert_eq!(report.n_answered, 2);
        assert_eq!(report.correct, 1);
        assert_eq!(report.accuracy, 0.5);
        assert_eq!(report.tie_count, 1);
        assert_eq!(report.rows[1].predicted, 0, "tie goes to the lowest index");
        assert!(report.rows[1].tie);
        assert_eq!(report.rows[2].answer, None);
    }

    #[test]
    fn report_is_byte_stable() {
        let params = zero_params();
        let examples = vec![empty_example("a", vec![1.0, 0.0], Some(0))];
        let r1 = evaluate(&params, None, &examples, "dev", "deadbeef").unwrap();
        let r2 = evaluate(&params, None, &examples, "dev", "deadbeef").unwrap();
        assert_eq!(format_report(&r1), format_report(&r2));
        let text = format_report(&r1);
        assert!(text.contains("# accuracy\t1.000000\n"), "{text}");
        assert!(text.ends_with("a\t0\t0\t1\t0\t0\n"), "{text}");
    }

    #[test]
    fn toy_scorer_must_match_features() {
        let params = zero_params();
        let examples = vec![empty_example("a", vec![0.0, 0.0], Some(0))];
        let toy = crate::ptm::ToyScorer::zeros(4);
        assert!(evaluate(&params, Some(&toy), &examples, "dev", "x").is_err());
    }

    #[test]
    fn unanswered_split_has_zero_accuracy_but_predictions() {
        let params = zero_params();
        let examples = vec![empty_example("a", vec![0.0, 1.0], None)];
        let report = evaluate(&params, None, &examples, "test", "x").unwrap();
        assert_eq!(report.n_answered, 0);
        assert_eq!(report.accuracy, 0.0);
        assert_eq!(report.rows[0].predicted, 1);
    }
}
