//! Train embeddings on a synthetic corpus with planted topics and check
//! that nearest neighbors land inside the right topic.
//!
//! Run with `cargo run -p catvec --example train_embeddings --release`.

use catvec::synth::{flat_planted, FlatSpec};
use catvec::{train, EmbeddingStore, ModelKind, Result, TrainConfig};

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

fn neighbors(store: &EmbeddingStore, id: &str, k: usize) -> Vec<(String, f64)> {
    let query = store.entity_vector_by_id(id).expect("known entity");
    let mut scored: Vec<(String, f64)> = store
        .entities()
        .filter(|e| *e != id)
        .map(|e| {
            let sim = cosine(query, store.entity_vector_by_id(e).unwrap());
            (e.to_string(), sim)
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

fn main() -> Result<()> {
    // Three topics, ten entities each; context words are drawn from the
    // entity's own topic with weight 0.9 and from each other topic with
    // weight 0.02.
    let spec = FlatSpec {
        categories: 3,
        entities_per_category: 10,
        contexts_per_entity: 300,
        seed: 42,
        ..FlatSpec::default()
    };
    let data = flat_planted(&spec);
    let (corpus, _) = data.corpus();
    println!(
        "corpus: {} pairs over a vocabulary of {}",
        corpus.pair_count(),
        corpus.vocab().len()
    );

    let config = TrainConfig {
        model: ModelKind::Hce,
        dim: 32,
        epochs: 4,
        seed: 9,
        workers: 1,
        ..TrainConfig::default()
    };
    let outcome = train(&corpus, &data.dag(), &config)?;
    for (epoch, loss) in outcome.epoch_mean_loss.iter().enumerate() {
        println!("epoch {:>2}  mean loss {loss:.6}", epoch + 1);
    }

    // Every neighbor list should stay inside the query's own topic.
    for id in ["topic0_item00", "topic1_item03", "topic2_item07"] {
        println!("{id} nearest:");
        for (other, sim) in neighbors(&outcome.store, id, 3) {
            println!("  {other:<16} cosine {sim:.4}");
        }
    }

    // Trained category vectors sit close to their member entities.
    let store = &outcome.store;
    for cat in ["topic0", "topic1", "topic2"] {
        let cv = store.category_vector_by_id(cat).expect("trained category");
        let own = cosine(
            cv,
            store.entity_vector_by_id(&format!("{cat}_item00")).unwrap(),
        );
        let other = cosine(cv, store.entity_vector_by_id("topic0_item05").unwrap());
        println!("{cat}: cosine to own member {own:.4}, to topic0_item05 {other:.4}");
    }
    Ok(())
}
