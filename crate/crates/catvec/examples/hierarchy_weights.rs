//! Ancestor weighting on three small category graphs: a chain, a diamond
//! where both branches are direct labels, and an edge list with a cycle
//! that gets repaired on load.
//!
//! Run with `cargo run -p catvec --example hierarchy_weights`.

use catvec::{load_hierarchy, CategoryDag, Result};

fn pairs(raw: &[(&str, &str)]) -> Vec<(String, String)> {
    raw.iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect()
}

fn show(dag: &CategoryDag, entity: &str) -> Result<()> {
    let weights = dag.ancestor_weights(entity)?;
    println!("{entity}:");
    for e in &weights.entries {
        println!(
            "  {:<12} distance={:<4} weight={:.6}",
            e.category, e.distance, e.weight
        );
    }
    let total: f64 = weights.entries.iter().map(|e| e.weight).sum();
    println!("  (sum of weights = {total:.12})");
    Ok(())
}

fn main() -> Result<()> {
    // A chain: sonata is labeled classical, classical sits under music,
    // music under arts. Weights fall off with 1/distance.
    let (chain, _) = load_hierarchy(
        pairs(&[("classical", "music"), ("music", "arts")]),
        pairs(&[("sonata", "classical")]),
    )?;
    println!("== chain: sonata -> classical -> music -> arts ==");
    show(&chain, "sonata")?;

    // A diamond with two direct labels: piano is both a keyboard and a
    // string instrument, and both categories roll up to instruments. The
    // apex is reachable by two one-edge paths, so its distance is the
    // average path length plus one.
    let (diamond, _) = load_hierarchy(
        pairs(&[("keyboards", "instruments"), ("strings", "instruments")]),
        pairs(&[("piano", "keyboards"), ("piano", "strings")]),
    )?;
    println!("\n== diamond: piano -> {{keyboards, strings}} -> instruments ==");
    show(&diamond, "piano")?;

    // A cyclic edge list: genres -> styles -> forms -> genres. Loading
    // breaks the cycle deterministically and reports the removed edges.
    let (repaired, report) = load_hierarchy(
        pairs(&[
            ("genres", "styles"),
            ("styles", "forms"),
            ("forms", "genres"),
        ]),
        pairs(&[("fugue", "genres")]),
    )?;
    println!("\n== cycle repair ==");
    for (child, parent) in &report.removed_edges {
        println!("removed edge {child} -> {parent}");
    }
    show(&repaired, "fugue")?;
    Ok(())
}
