//! Randomized invariant checks over the public API.

use std::collections::{BTreeMap, BTreeSet};

use proptest::prelude::*;

use catvec::{
    agglomerative, bottom_up_classify, brute_force_match, densified_similarity, hungarian_match,
    kmeans, leaf_similarities, load_hierarchy, micro_macro_f1, purity, DatalessConfig, EsaVector,
    ExportSet, GoldStandard, LabelTree, Linkage, Metric, NegativeSampler, DEFAULT_ESA_SIZE,
};

fn names(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn store_of(entities: usize, seed: u64) -> catvec::EmbeddingStore {
    catvec::init_model(names("e", entities), vec!["cat".into()], 4, seed).unwrap()
}

/// Raw (child, parent) index pairs, possibly cyclic, over `n` categories.
fn dag_edges(n: usize) -> impl Strategy<Value = Vec<(String, String)>> {
    proptest::collection::vec((0..n, 0..n), 0..=2 * n).prop_map(|raw| {
        raw.into_iter()
            .map(|(c, p)| (format!("c{c}"), format!("c{p}")))
            .collect()
    })
}

fn esa(universe: usize, max_entries: usize) -> impl Strategy<Value = EsaVector> {
    proptest::collection::btree_map(0..universe, 0.1f64..5.0, 1..=max_entries).prop_map(|entries| {
        let raw = entries
            .into_iter()
            .map(|(i, w)| (format!("e{i}"), w))
            .collect();
        EsaVector::new(raw, DEFAULT_ESA_SIZE).unwrap()
    })
}

fn label_sets(
    universe: &'static [&'static str],
) -> impl Strategy<Value = BTreeMap<String, BTreeSet<String>>> {
    proptest::collection::btree_map(
        0..6usize,
        proptest::collection::btree_set(proptest::sample::select(universe), 0..=universe.len()),
        0..=6,
    )
    .prop_map(|m| {
        m.into_iter()
            .map(|(d, ls)| {
                (
                    format!("d{d}"),
                    ls.into_iter().map(str::to_string).collect(),
                )
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    /// Loading repairs arbitrary (even cyclic) edge lists into a DAG:
    /// every category's upward closure excludes itself, and every ancestor
    /// weighting normalizes with the weight-distance product constant.
    #[test]
    fn hierarchy_repair_yields_weighted_dag(
        edges in (2usize..=8).prop_flat_map(dag_edges),
        label_picks in proptest::collection::vec(0usize..8, 1..=4),
    ) {
        let labels: Vec<(String, String)> = label_picks
            .iter()
            .enumerate()
            .map(|(i, c)| (format!("x{i}"), format!("c{c}")))
            .collect();
        let (dag, _) = load_hierarchy(edges, labels).unwrap();

        for cat in dag.categories() {
            let mut seen = BTreeSet::new();
            let mut frontier = vec![cat.to_string()];
            while let Some(c) = frontier.pop() {
                for p in dag.parents_of(&c).unwrap() {
                    if seen.insert(p.clone()) {
                        frontier.push(p.clone());
                    }
                }
            }
            prop_assert!(!seen.contains(cat), "cycle through {cat}");
        }

        for entity in dag.entities() {
            let w = dag.ancestor_weights(entity).unwrap();
            let total: f64 = w.entries.iter().map(|e| e.weight).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
            let norm = w.entries[0].weight * w.entries[0].distance;
            for e in &w.entries {
                prop_assert!(e.weight > 0.0 && e.distance >= 1.0);
                prop_assert!((e.weight * e.distance - norm).abs() < 1e-9 * norm.max(1.0));
            }
            for pair in w.entries.windows(2) {
                prop_assert!(pair[0].distance <= pair[1].distance);
                prop_assert!(pair[0].weight >= pair[1].weight - 1e-12);
            }
        }
    }

    /// On a pure chain the k-th ancestor's weight is (1/k) / H_n.
    #[test]
    fn chain_weights_are_harmonic(len in 1usize..=8) {
        let edges: Vec<(String, String)> = (1..len)
            .map(|i| (format!("c{}", i - 1), format!("c{i}")))
            .collect();
        let (dag, _) = load_hierarchy(edges, vec![("x".to_string(), "c0".to_string())]).unwrap();
        let w = dag.ancestor_weights("x").unwrap();
        prop_assert_eq!(w.entries.len(), len);
        let h: f64 = (1..=len).map(|k| 1.0 / k as f64).sum();
        for (k, e) in w.entries.iter().enumerate() {
            let expect = (1.0 / (k + 1) as f64) / h;
            prop_assert!((e.weight - expect).abs() < 1e-12);
        }
    }

    /// Negative-sampling probabilities normalize and respect frequency order.
    #[test]
    fn sampler_distribution_is_consistent(
        freqs in proptest::collection::vec(1u64..1000, 2..50),
        exponent in prop_oneof![Just(0.5f64), Just(0.75), Just(1.0)],
    ) {
        let sampler = NegativeSampler::from_frequencies(&freqs, exponent, 5).unwrap();
        let probs: Vec<f64> = (0..freqs.len()).map(|i| sampler.probability(i as u32)).collect();
        let total: f64 = probs.iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        for i in 0..freqs.len() {
            for j in 0..freqs.len() {
                if freqs[i] > freqs[j] {
                    prop_assert!(probs[i] >= probs[j] - 1e-12);
                }
            }
        }
    }

    /// The O(n^3) assignment solver agrees with exhaustive search on
    /// continuous nonnegative scores (its documented domain), returns a
    /// valid partial permutation, and is invariant under transposition.
    #[test]
    fn assignment_solver_is_optimal(
        scores in proptest::collection::vec(
            proptest::collection::vec(0.0f64..10.0, 1..=5), 1..=5),
    ) {
        let cols = scores[0].len();
        let scores: Vec<Vec<f64>> =
            scores.into_iter().map(|mut r| { r.resize(cols, 0.0); r }).collect();

        let fast = hungarian_match(&scores).unwrap();
        let slow = brute_force_match(&scores).unwrap();
        let scale = fast.total.abs().max(1.0);
        prop_assert!((fast.total - slow.total).abs() <= 1e-9 * scale);

        prop_assert_eq!(fast.pairs.len(), scores.len().min(cols));
        let rows: BTreeSet<usize> = fast.pairs.iter().map(|&(r, _)| r).collect();
        let cs: BTreeSet<usize> = fast.pairs.iter().map(|&(_, c)| c).collect();
        prop_assert_eq!(rows.len(), fast.pairs.len());
        prop_assert_eq!(cs.len(), fast.pairs.len());
        let picked: f64 = fast.pairs.iter().map(|&(r, c)| scores[r][c]).sum();
        prop_assert!((picked - fast.total).abs() <= 1e-12 * scale);

        let transposed: Vec<Vec<f64>> =
            (0..cols).map(|c| scores.iter().map(|r| r[c]).collect()).collect();
        let t = hungarian_match(&transposed).unwrap();
        prop_assert!((t.total - fast.total).abs() <= 1e-9 * scale);

        let mut poisoned = scores;
        poisoned[0][0] = -1.0;
        prop_assert!(hungarian_match(&poisoned).is_err(), "negative scores must be rejected");
    }

    /// Both clustering routines return a partition of the input ids.
    #[test]
    fn clustering_partitions_input(
        raw in proptest::collection::vec(
            proptest::collection::vec(-5.0f64..5.0, 3), 2..24),
        k in 1usize..6,
        seed in 0u64..1000,
    ) {
        prop_assume!(k <= raw.len());
        let vectors: BTreeMap<String, Vec<f64>> = raw
            .into_iter()
            .enumerate()
            .map(|(i, v)| (format!("p{i:02}"), v))
            .collect();
        let all: BTreeSet<String> = vectors.keys().cloned().collect();

        let km = kmeans(&vectors, k, seed, 50).unwrap();
        prop_assert!(!km.clusters.is_empty() && km.clusters.len() <= k);
        let mut seen = BTreeSet::new();
        for c in &km.clusters {
            prop_assert!(!c.is_empty());
            for id in c {
                prop_assert!(seen.insert(id.clone()), "{id} assigned twice");
            }
        }
        prop_assert_eq!(&seen, &all);

        let ag = agglomerative(&vectors, k, Metric::Cosine, Linkage::Average).unwrap();
        prop_assert_eq!(ag.clusters.len(), k);
        let mut seen = BTreeSet::new();
        for c in &ag.clusters {
            prop_assert!(!c.is_empty());
            for id in c {
                prop_assert!(seen.insert(id.clone()), "{id} assigned twice");
            }
        }
        prop_assert_eq!(&seen, &all);
    }

    /// Purity lies in (0, 1] and is exactly 1 on the gold partition itself
    /// and on all-singleton clusters.
    #[test]
    fn purity_bounds(assignments in proptest::collection::vec(0usize..4, 4..40)) {
        let pairs: Vec<(String, String)> = assignments
            .iter()
            .enumerate()
            .map(|(i, c)| (format!("class{c}"), format!("m{i:02}")))
            .collect();
        let gold = GoldStandard::from_pairs(pairs.clone()).unwrap();

        let gold_partition: Vec<BTreeSet<String>> =
            gold.classes().map(|(_, set)| set.clone()).collect();
        prop_assert_eq!(purity(&gold_partition, &gold).unwrap(), 1.0);

        let singletons: Vec<BTreeSet<String>> = gold
            .concepts()
            .map(|c| BTreeSet::from([c.to_string()]))
            .collect();
        prop_assert_eq!(purity(&singletons, &gold).unwrap(), 1.0);

        let lump: Vec<BTreeSet<String>> =
            vec![gold.concepts().map(str::to_string).collect()];
        let p = purity(&lump, &gold).unwrap();
        prop_assert!(p > 0.0 && p <= 1.0);
    }

    /// Densified similarity is bounded by [0, 1] and symmetric in its two
    /// sparse arguments when unweighted.
    #[test]
    fn densified_similarity_symmetric(
        u in esa(8, 6),
        v in esa(8, 6),
        seed in 0u64..500,
    ) {
        let store = store_of(8, seed);
        let cfg = DatalessConfig { cutoff: 0.3, ..DatalessConfig::default() };
        let uv = densified_similarity(&u, &v, &store, &cfg).unwrap();
        let vu = densified_similarity(&v, &u, &store, &cfg).unwrap();
        prop_assert!((0.0..=1.0).contains(&uv));
        prop_assert!((uv - vu).abs() < 1e-9);
    }

    /// Raising delta can only shrink the predicted label set, and the best
    /// leaf's path is always kept.
    #[test]
    fn stricter_delta_shrinks_predictions(
        doc in esa(8, 6),
        leaf_vecs in proptest::collection::vec(esa(8, 6), 4),
        lo in 0.05f64..1.0,
        hi in 0.05f64..1.0,
        seed in 0u64..500,
    ) {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        let empty = EsaVector::new(Vec::new(), DEFAULT_ESA_SIZE).unwrap();
        let mut rows = vec![
            ("root".to_string(), None, empty.clone()),
            ("p0".to_string(), Some("root".to_string()), empty.clone()),
            ("p1".to_string(), Some("root".to_string()), empty),
        ];
        for (i, v) in leaf_vecs.into_iter().enumerate() {
            rows.push((format!("l{i}"), Some(format!("p{}", i % 2)), v));
        }
        let tree = LabelTree::from_nodes(rows).unwrap();
        let store = store_of(8, seed);

        let loose = DatalessConfig { cutoff: 0.3, delta: lo, ..DatalessConfig::default() };
        let strict = DatalessConfig { cutoff: 0.3, delta: hi, ..DatalessConfig::default() };
        let wide: BTreeSet<String> =
            bottom_up_classify(&doc, &tree, &store, &loose).unwrap().into_iter().collect();
        let narrow: BTreeSet<String> =
            bottom_up_classify(&doc, &tree, &store, &strict).unwrap().into_iter().collect();
        prop_assert!(narrow.is_subset(&wide), "narrow {narrow:?} vs wide {wide:?}");

        let ranked = leaf_similarities(&doc, &tree, &store, &loose).unwrap();
        if ranked[0].1 > 0.0 {
            let best = &ranked[0].0;
            prop_assert!(wide.contains(best));
            prop_assert!(wide.contains(&tree.node(best).unwrap().parent.clone().unwrap()));
            prop_assert!(!wide.contains("root"));
        } else {
            prop_assert!(wide.is_empty());
        }
    }

    /// F1 aggregates stay inside [0, 1]; exact agreement scores 1.
    #[test]
    fn f1_scores_bounded(
        predictions in label_sets(&["l0", "l1", "l2", "l3"]),
        gold in label_sets(&["l0", "l1", "l2", "l3"]),
    ) {
        let universe: BTreeSet<String> =
            ["l0", "l1", "l2", "l3"].iter().map(|s| s.to_string()).collect();
        let scores = micro_macro_f1(&predictions, &gold, &universe).unwrap();
        prop_assert!((0.0..=1.0).contains(&scores.micro));
        prop_assert!((0.0..=1.0).contains(&scores.macro_));
        for counts in scores.per_label.values() {
            prop_assert!((0.0..=1.0).contains(&counts.f1()));
        }

        let agreed = micro_macro_f1(&gold, &gold, &universe).unwrap();
        let nonempty = gold.values().any(|ls| !ls.is_empty());
        if nonempty {
            prop_assert_eq!(agreed.micro, 1.0);
        } else {
            prop_assert_eq!(agreed.micro, 0.0);
        }
    }

    /// Stratified splitting partitions every class, sending the odd
    /// concept to the validation side.
    #[test]
    fn stratified_split_partitions_classes(
        assignments in proptest::collection::vec(0usize..5, 2..40),
        seed in 0u64..1000,
    ) {
        let pairs: Vec<(String, String)> = assignments
            .iter()
            .enumerate()
            .map(|(i, c)| (format!("class{c}"), format!("m{i:02}")))
            .collect();
        let gold = GoldStandard::from_pairs(pairs).unwrap();
        let (val, test) = gold.split_stratified(seed);

        prop_assert_eq!(val.n() + test.n(), gold.n());
        for (class, members) in gold.classes() {
            let mut nv = 0usize;
            let mut nt = 0usize;
            for m in members {
                match (val.class_of(m), test.class_of(m)) {
                    (Some(c), None) => { prop_assert_eq!(c, class); nv += 1; }
                    (None, Some(c)) => { prop_assert_eq!(c, class); nt += 1; }
                    other => prop_assert!(false, "{m} split badly: {other:?}"),
                }
            }
            prop_assert_eq!(nv, members.len() - members.len() / 2);
            prop_assert_eq!(nt, members.len() / 2);
        }
    }

    /// Embedding files survive an export/import/export round trip
    /// byte for byte.
    #[test]
    fn export_import_roundtrip(
        entities in 1usize..12,
        categories in 1usize..6,
        dim in 1usize..6,
        seed in 0u64..1000,
    ) {
        let store = catvec::init_model(
            names("e", entities), names("c", categories), dim, seed).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.emb");
        let b = dir.path().join("b.emb");
        store.export(&a, ExportSet::Both).unwrap();
        let loaded = catvec::EmbeddingStore::import(&a).unwrap();
        loaded.export(&b, ExportSet::Both).unwrap();
        prop_assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    }
}
