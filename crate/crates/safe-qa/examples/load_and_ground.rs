//! Loads a tiny knowledge graph from TSV, grounds a multiple-choice question
//! onto it by n-gram matching, and prints the evidence subgraph each
//! candidate induces.
//!
//! Run with: cargo run --example load_and_ground

use safe_qa::{build_subgraph, ground, Graph};

fn main() -> anyhow::Result<()> {
    // relation<TAB>head<TAB>tail, one edge per line. Inverse augmentation
    // adds a reversed inv_* edge for every line so paths can run both ways.
    let tsv = "\
desire\tpeople\tdrink_water
related_to\tdrink_water\twater
at_location\twater\tlake
at_location\twater\tbottle
capable_of\tfish\tswim
at_location\tfish\tlake
used_for\tbottle\tstore_water
";
    let graph = Graph::from_tsv_str(tsv, true, "inline")?;
    println!(
        "graph: {} nodes, {} relations ({} after inverses), {} edges",
        graph.node_count(),
        graph.relation_count() / 2,
        graph.relation_count(),
        graph.edge_count()
    );

    let question = "where do people find water";
    let candidates = ["lake", "bottle", "swim"].map(String::from);
    let grounded = ground(&graph, "q1", question, &candidates, Some(0))?;
    let names: Vec<&str> = grounded
        .question_concepts
        .iter()
        .map(|&c| graph.concept_surface(c))
        .collect::<safe_qa::Result<_>>()?;
    println!("question concepts: {names:?}");

    // The k-hop evidence subgraph keeps exactly the nodes lying on some
    // question→candidate path; unreachable candidates induce empty evidence.
    for (i, cand) in candidates.iter().enumerate() {
        let sub = build_subgraph(&graph, &grounded, i, 2)?;
        println!(
            "candidate '{cand}': {} grounded concepts, subgraph {} nodes / {} edges",
            grounded.candidate_concepts[i].len(),
            sub.node_count(),
            sub.edge_count()
        );
    }
    Ok(())
}
