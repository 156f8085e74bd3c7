//! Walks every simple ≤k-hop path between question and candidate concepts,
//! simplifies node identities to roles, and prints the resulting frequency
//! feature set together with its one-hot encoding layout.
//!
//! Run with: cargo run --example extract_path_features

use safe_qa::model::format_path;
use safe_qa::paths::{build_feature_set, enumerate_paths, simplify};
use safe_qa::{codec, ground, Graph, PairId};

fn main() -> anyhow::Result<()> {
    let tsv = "\
desire\tpeople\tdrink_water
related_to\tdrink_water\twater
at_location\twater\tlake
at_location\tfish\tlake
related_to\twater\tfish
";
    let graph = Graph::from_tsv_str(tsv, true, "inline")?;
    let candidates = ["lake", "fish"].map(String::from);
    let grounded = ground(&graph, "q1", "people desire water", &candidates, Some(0))?;
    let (vq, vc) = (&grounded.question_concepts, &grounded.candidate_concepts[0]);

    // Node-level paths keep concrete concepts; simplification forgets them,
    // keeping only roles (0=question, 1=answer, 2=other) and relations.
    let k = 2;
    let (paths, truncated) = enumerate_paths(&graph, vq, vc, k, 1000)?;
    println!("{} node-level paths to 'lake' (truncated: {truncated})", paths.len());
    for p in &paths {
        let surfaces: Vec<&str> = p
            .nodes
            .iter()
            .map(|&n| graph.concept_surface(n))
            .collect::<safe_qa::Result<_>>()?;
        let simplified = simplify(p, vq, vc);
        println!(
            "  {} => {}",
            surfaces.join(" -> "),
            format_path(&simplified, &graph.relation_names())?
        );
    }

    // The feature set groups identical simplified paths and counts them.
    let pair = PairId { example_id: "q1".into(), candidate_index: 0 };
    let fs = build_feature_set(&graph, pair, vq, vc, k, 1000)?;
    println!("feature set: {} distinct paths, {} total", fs.distinct_paths(), fs.total_paths());
    for (p, f) in &fs.entries {
        let enc = codec::encode(p, k, graph.relation_count())?;
        let ones: Vec<usize> =
            enc.iter().enumerate().filter(|(_, v)| **v == 1.0).map(|(i, _)| i).collect();
        println!(
            "  f={f}  {}  one-hot dim {} bits {ones:?}",
            format_path(p, &graph.relation_names())?,
            enc.len()
        );
    }
    Ok(())
}
