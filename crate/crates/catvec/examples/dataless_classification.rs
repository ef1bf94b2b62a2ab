//! Label documents against a label tree without any labeled training
//! data: train embeddings on the toy corpus, then classify the toy
//! documents bottom-up through the tree and score them against gold
//! label sets.
//!
//! Run with `cargo run -p catvec --example dataless_classification`.

use std::path::Path;

use catvec::{
    bottom_up_classify, evaluate_dataless, leaf_similarities, read_documents_file,
    read_gold_labels, train, DatalessConfig, LabelTree, ModelKind, Result, TrainConfig,
    TrainingCorpus, DEFAULT_ESA_SIZE,
};

fn main() -> Result<()> {
    let data = Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy");

    let (corpus, _) = TrainingCorpus::load_file(&data.join("corpus.tsv"))?;
    let (dag, _) = catvec::load_hierarchy(
        catvec::read_edge_file(&data.join("edges.tsv"))?,
        catvec::read_label_file(&data.join("labels.tsv"))?,
    )?;
    let config = TrainConfig {
        model: ModelKind::Hce,
        dim: 16,
        epochs: 40,
        lr_initial: 0.05,
        seed: 7,
        workers: 1,
        ..TrainConfig::default()
    };
    let store = train(&corpus, &dag, &config)?.store;

    let tree = LabelTree::load(&data.join("tree.tsv"), DEFAULT_ESA_SIZE)?;
    let docs = read_documents_file(&data.join("docs.tsv"), DEFAULT_ESA_SIZE)?;
    let gold = read_gold_labels(&data.join("doc_gold.tsv"))?;
    let cfg = DatalessConfig::default();

    // Walk one document by hand: leaf similarities, then the label set
    // the bottom-up pass derives from them.
    let doc = &docs["doc01"];
    println!("doc01 leaf similarities:");
    for (leaf, sim) in leaf_similarities(doc, &tree, &store, &cfg)? {
        println!("  {leaf:<10} {sim:.4}");
    }
    let labels = bottom_up_classify(doc, &tree, &store, &cfg)?;
    println!("doc01 predicted labels: {}", labels.join(" "));

    let report = evaluate_dataless(&docs, &gold, &tree, &store, &cfg)?;
    println!("\n{} documents scored", report.documents);
    println!("micro F1      {:.4}", report.micro_f1);
    println!("macro F1      {:.4}", report.macro_f1);
    println!("micro F1 at 1 {:.4}", report.micro_f1_at_1);
    for (label, counts) in &report.per_label {
        println!(
            "  {label:<10} tp={} fp={} fn={}",
            counts.true_pos, counts.false_pos, counts.false_neg
        );
    }
    Ok(())
}
