//! Dataless hierarchical classification.
//!
//! Documents and label descriptions are sparse bags of entities. Their
//! similarity is densified through the embeddings: build the pairwise
//! entity-similarity matrix, find the optimal one-to-one matching, and
//! average the matched similarities. Classification is bottom-up over a
//! label tree — pick the most similar leaf, emit its root-ward path, and add
//! any other leaf close enough to the winner. Scoring is micro/macro F1.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::collections::VecDeque;
use std::path::Path;

use crate::assignment::hungarian_match;
use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::fileio;
use crate::sparse::EsaVector;

/// Knobs of the densified bottom-up classifier.
#[derive(Debug, Clone)]
pub struct DatalessConfig {
    /// Entity-pair similarities below this are zeroed.
    pub cutoff: f64,
    /// A leaf is co-predicted when its similarity reaches `delta` times the
    /// best leaf's.
    pub delta: f64,
    /// Weight the densified average by the matched entities' ESA weights.
    pub weighted: bool,
}

impl Default for DatalessConfig {
    fn default() -> Self {
        DatalessConfig {
            cutoff: 0.85,
            delta: 0.95,
            weighted: false,
        }
    }
}

impl DatalessConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.cutoff.is_finite() && (0.0..=1.0).contains(&self.cutoff)) {
            return Err(Error::Config(format!(
                "cutoff must be in [0, 1], got {}",
                self.cutoff
            )));
        }
        if !(self.delta.is_finite() && self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::Config(format!(
                "delta must be in (0, 1], got {}",
                self.delta
            )));
        }
        Ok(())
    }
}

fn cosine_dense(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na * nb).sqrt()
}

/// Similarity of two entities: 1 for the same id; otherwise the cosine of
/// their input embeddings when both exist, else 0. Values below `cutoff`
/// collapse to 0, so missing embeddings simply contribute nothing.
pub fn entity_pair_similarity(e1: &str, e2: &str, store: &EmbeddingStore, cutoff: f64) -> f64 {
    let sim = if e1 == e2 {
        1.0
    } else {
        match (store.entity_vector_by_id(e1), store.entity_vector_by_id(e2)) {
            (Some(a), Some(b)) => cosine_dense(a, b).min(1.0),
            _ => 0.0,
        }
    };
    if sim < cutoff {
        0.0
    } else {
        sim
    }
}

/// Densified similarity of two sparse vectors: the mean similarity of the
/// optimally matched entity pairs, i.e. Hungarian total / min(m, n). With
/// `weighted` set, matched pairs are averaged with weights `w_doc * w_label`
/// instead (0 when all such products vanish).
pub fn densified_similarity(
    doc: &EsaVector,
    label: &EsaVector,
    store: &EmbeddingStore,
    cfg: &DatalessConfig,
) -> Result<f64> {
    if doc.is_empty() || label.is_empty() {
        return Err(Error::Invalid(
            "densified similarity needs nonempty vectors".into(),
        ));
    }
    let scores: Vec<Vec<f64>> = doc
        .entries()
        .iter()
        .map(|(de, _)| {
            label
                .entries()
                .iter()
                .map(|(le, _)| entity_pair_similarity(de, le, store, cfg.cutoff))
                .collect()
        })
        .collect();
    let assignment = hungarian_match(&scores)?;
    if cfg.weighted {
        let mut num = 0.0;
        let mut den = 0.0;
        for &(i, j) in &assignment.pairs {
            let w = doc.entries()[i].1 * label.entries()[j].1;
            num += w * scores[i][j];
            den += w;
        }
        Ok(if den == 0.0 { 0.0 } else { num / den })
    } else {
        Ok(assignment.total / doc.len().min(label.len()) as f64)
    }
}

/// One node of the label tree.
#[derive(Debug, Clone)]
pub struct LabelNode {
    pub parent: Option<String>,
    pub vector: EsaVector,
    pub depth: usize,
}

/// A rooted label taxonomy with a sparse description per node. Leaves must
/// carry nonempty descriptions — they are what documents are compared to.
#[derive(Debug, Clone)]
pub struct LabelTree {
    nodes: BTreeMap<String, LabelNode>,
    root: String,
    leaves: BTreeSet<String>,
}

impl LabelTree {
    /// Builds and validates a tree from (label, parent, description) rows:
    /// exactly one root, all parents present, no cycles, every leaf with a
    /// nonempty description.
    pub fn from_nodes(rows: Vec<(String, Option<String>, EsaVector)>) -> Result<Self> {
        let mut nodes: BTreeMap<String, LabelNode> = BTreeMap::new();
        for (label, parent, vector) in rows {
            if label.is_empty() || label.chars().any(char::is_whitespace) {
                return Err(Error::Structure(format!("bad label id {label:?}")));
            }
            let prior = nodes.insert(
                label.clone(),
                LabelNode {
                    parent,
                    vector,
                    depth: 0,
                },
            );
            if prior.is_some() {
                return Err(Error::Structure(format!("label {label} defined twice")));
            }
        }
        let roots: Vec<&String> = nodes
            .iter()
            .filter(|(_, n)| n.parent.is_none())
            .map(|(l, _)| l)
            .collect();
        let root = match roots.as_slice() {
            [only] => (*only).clone(),
            [] => return Err(Error::Structure("label tree has no root".into())),
            several => {
                return Err(Error::Structure(format!(
                    "label tree has several roots: {}",
                    several
                        .iter()
                        .map(|s| s.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                )));
            }
        };
        let mut children: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for (label, node) in &nodes {
            if let Some(parent) = &node.parent {
                if !nodes.contains_key(parent) {
                    return Err(Error::Structure(format!(
                        "label {label} names missing parent {parent}"
                    )));
                }
                children
                    .entry(parent.clone())
                    .or_default()
                    .push(label.clone());
            }
        }
        // Depths by walking down from the root; anything unreached sits on a
        // cycle.
        let mut depth: BTreeMap<String, usize> = BTreeMap::new();
        let mut queue = VecDeque::from([(root.clone(), 0usize)]);
        while let Some((label, d)) = queue.pop_front() {
            for child in children.get(&label).into_iter().flatten() {
                queue.push_back((child.clone(), d + 1));
            }
            depth.insert(label, d);
        }
        if depth.len() != nodes.len() {
            let stranded: Vec<&str> = nodes
                .keys()
                .filter(|l| !depth.contains_key(*l))
                .map(|l| l.as_str())
                .collect();
            return Err(Error::Structure(format!(
                "labels caught in a parent cycle: {}",
                stranded.join(", ")
            )));
        }
        for (label, d) in &depth {
            nodes.get_mut(label).unwrap().depth = *d;
        }
        let leaves: BTreeSet<String> = nodes
            .keys()
            .filter(|l| !children.contains_key(*l))
            .cloned()
            .collect();
        for leaf in &leaves {
            if nodes[leaf].vector.is_empty() {
                return Err(Error::Structure(format!(
                    "leaf {leaf} has no description vector"
                )));
            }
        }
        Ok(LabelTree {
            nodes,
            root,
            leaves,
        })
    }

    /// Reads `label<TAB>parent(or -)<TAB>inline sparse vector` lines.
    pub fn load(path: &Path, max_vector_len: usize) -> Result<Self> {
        let name = path.display().to_string();
        let mut rows = Vec::new();
        for (line_no, line) in fileio::data_lines(path)? {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::parse(
                    &name,
                    line_no,
                    "expected label<TAB>parent<TAB>sparse vector".to_string(),
                ));
            }
            let parent = match fields[1] {
                "-" => None,
                p => Some(p.to_string()),
            };
            let vector = EsaVector::parse_inline(fields[2], max_vector_len)
                .map_err(|e| Error::parse(&name, line_no, e.to_string()))?;
            rows.push((fields[0].to_string(), parent, vector));
        }
        Self::from_nodes(rows).map_err(|e| match e {
            Error::Structure(msg) => Error::Structure(format!("{name}: {msg}")),
            other => other,
        })
    }

    pub fn root(&self) -> &str {
        &self.root
    }

    pub fn leaves(&self) -> impl Iterator<Item = &str> {
        self.leaves.iter().map(|l| l.as_str())
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.nodes.keys().map(|l| l.as_str())
    }

    /// Every label except the root — the universe that classification
    /// predicts over and F1 averages over.
    pub fn scored_labels(&self) -> BTreeSet<String> {
        self.nodes
            .keys()
            .filter(|l| **l != self.root)
            .cloned()
            .collect()
    }

    pub fn node(&self, label: &str) -> Option<&LabelNode> {
        self.nodes.get(label)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// The label and its ancestors, root excluded, nearest first.
    pub fn path_excluding_root(&self, label: &str) -> Result<Vec<String>> {
        let mut path = Vec::new();
        let mut cursor = label;
        loop {
            let node = self.nodes.get(cursor).ok_or_else(|| Error::UnknownId {
                kind: "label",
                id: cursor.to_string(),
            })?;
            if cursor != self.root {
                path.push(cursor.to_string());
            }
            match &node.parent {
                Some(p) => cursor = p,
                None => break,
            }
        }
        Ok(path)
    }
}

/// Densified similarity of the document against every leaf, sorted by
/// similarity descending (leaf id ascending on ties).
pub fn leaf_similarities(
    doc: &EsaVector,
    tree: &LabelTree,
    store: &EmbeddingStore,
    cfg: &DatalessConfig,
) -> Result<Vec<(String, f64)>> {
    let mut sims = Vec::new();
    for leaf in tree.leaves() {
        let sim = densified_similarity(doc, &tree.node(leaf).unwrap().vector, store, cfg)?;
        sims.push((leaf.to_string(), sim));
    }
    sims.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    Ok(sims)
}

fn paths_for_leaves(tree: &LabelTree, leaves: &[&str]) -> Vec<String> {
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for leaf in leaves {
        for label in tree.path_excluding_root(leaf).expect("leaf exists") {
            if seen.insert(label.clone()) {
                out.push(label);
            }
        }
    }
    out
}

/// Bottom-up multi-label prediction: the most similar leaf's root-ward path,
/// plus the path of every other leaf whose similarity reaches `delta` times
/// the winner's. All-zero similarities predict nothing.
pub fn bottom_up_classify(
    doc: &EsaVector,
    tree: &LabelTree,
    store: &EmbeddingStore,
    cfg: &DatalessConfig,
) -> Result<Vec<String>> {
    cfg.validate()?;
    if doc.is_empty() {
        return Err(Error::Invalid("cannot classify an empty document".into()));
    }
    let sims = leaf_similarities(doc, tree, store, cfg)?;
    let Some(&(_, best)) = sims.first().filter(|(_, s)| *s > 0.0) else {
        return Ok(Vec::new());
    };
    let threshold = cfg.delta * best;
    let selected: Vec<&str> = sims
        .iter()
        .enumerate()
        .filter(|&(rank, (_, sim))| rank == 0 || *sim >= threshold)
        .map(|(_, (leaf, _))| leaf.as_str())
        .collect();
    Ok(paths_for_leaves(tree, &selected))
}

/// Like [`bottom_up_classify`] but keeps only the single best leaf's path
/// (ties broken by leaf id) — the prediction set behind the micro-F1@1
/// score.
pub fn bottom_up_classify_top1(
    doc: &EsaVector,
    tree: &LabelTree,
    store: &EmbeddingStore,
    cfg: &DatalessConfig,
) -> Result<Vec<String>> {
    cfg.validate()?;
    if doc.is_empty() {
        return Err(Error::Invalid("cannot classify an empty document".into()));
    }
    let sims = leaf_similarities(doc, tree, store, cfg)?;
    match sims.first() {
        Some((leaf, sim)) if *sim > 0.0 => Ok(paths_for_leaves(tree, &[leaf.as_str()])),
        _ => Ok(Vec::new()),
    }
}

/// Per-label confusion tallies.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
}

impl ConfusionCounts {
    /// Per-label F1 = 2TP / (2TP + FP + FN), the harmonic mean of precision
    /// and recall; 0 when the label never occurs at all.
    pub fn f1(&self) -> f64 {
        let denom = 2 * self.true_pos + self.false_pos + self.false_neg;
        if denom == 0 {
            0.0
        } else {
            2.0 * self.true_pos as f64 / denom as f64
        }
    }
}

/// Micro/macro F1 over a label universe.
#[derive(Debug, Clone)]
pub struct F1Scores {
    pub micro: f64,
    pub macro_: f64,
    pub per_label: BTreeMap<String, ConfusionCounts>,
}

/// Tallies per-label TP/FP/FN over all documents and aggregates: micro F1
/// pools the counts, macro F1 averages per-label F1 (zero-count labels
/// contribute 0). Every referenced label must belong to the universe.
pub fn micro_macro_f1(
    predictions: &BTreeMap<String, BTreeSet<String>>,
    gold: &BTreeMap<String, BTreeSet<String>>,
    universe: &BTreeSet<String>,
) -> Result<F1Scores> {
    if universe.is_empty() {
        return Err(Error::Invalid("empty label universe".into()));
    }
    let mut per_label: BTreeMap<String, ConfusionCounts> = universe
        .iter()
        .map(|l| (l.clone(), ConfusionCounts::default()))
        .collect();
    let docs: BTreeSet<&String> = predictions.keys().chain(gold.keys()).collect();
    let empty = BTreeSet::new();
    for doc in docs {
        let pred = predictions.get(doc).unwrap_or(&empty);
        let truth = gold.get(doc).unwrap_or(&empty);
        for label in pred.union(truth) {
            let counts = per_label.get_mut(label).ok_or_else(|| {
                Error::Invalid(format!("label {label} is outside the label universe"))
            })?;
            match (pred.contains(label), truth.contains(label)) {
                (true, true) => counts.true_pos += 1,
                (true, false) => counts.false_pos += 1,
                (false, true) => counts.false_neg += 1,
                (false, false) => unreachable!(),
            }
        }
    }
    let pooled = per_label
        .values()
        .fold(ConfusionCounts::default(), |a, c| ConfusionCounts {
            true_pos: a.true_pos + c.true_pos,
            false_pos: a.false_pos + c.false_pos,
            false_neg: a.false_neg + c.false_neg,
        });
    let macro_ = per_label.values().map(|c| c.f1()).sum::<f64>() / per_label.len() as f64;
    Ok(F1Scores {
        micro: pooled.f1(),
        macro_,
        per_label,
    })
}

/// Reads gold labels: `doc_id<TAB>label1 label2 ...` per line.
pub fn read_gold_labels(path: &Path) -> Result<BTreeMap<String, BTreeSet<String>>> {
    let name = path.display().to_string();
    let mut gold = BTreeMap::new();
    for (line_no, line) in fileio::data_lines(path)? {
        let Some((doc_id, rest)) = line.split_once('\t') else {
            return Err(Error::parse(
                &name,
                line_no,
                "expected doc_id<TAB>labels".to_string(),
            ));
        };
        if doc_id.is_empty() || doc_id.chars().any(char::is_whitespace) {
            return Err(Error::parse(
                &name,
                line_no,
                format!("bad doc id {doc_id:?}"),
            ));
        }
        let labels: BTreeSet<String> = rest
            .split(' ')
            .filter(|l| !l.is_empty())
            .map(|l| l.to_string())
            .collect();
        if gold.insert(doc_id.to_string(), labels).is_some() {
            return Err(Error::parse(
                &name,
                line_no,
                format!("duplicate document id {doc_id}"),
            ));
        }
    }
    Ok(gold)
}

/// Full evaluation outcome, including the @1 variant and per-label counts.
#[derive(Debug, Clone)]
pub struct DatalessReport {
    pub micro_f1: f64,
    pub macro_f1: f64,
    pub micro_f1_at_1: f64,
    pub per_label: BTreeMap<String, ConfusionCounts>,
    pub documents: usize,
    /// Documents whose similarities were all zero (predicted nothing).
    pub empty_predictions: usize,
    /// Gold documents with no sparse vector; they predict nothing.
    pub docs_without_vectors: Vec<String>,
}

/// Classifies every gold document and scores the predictions. Gold labels
/// must come from the tree (root excluded); documents lacking a sparse
/// vector predict nothing and count against recall.
pub fn evaluate_dataless(
    docs: &BTreeMap<String, EsaVector>,
    gold: &BTreeMap<String, BTreeSet<String>>,
    tree: &LabelTree,
    store: &EmbeddingStore,
    cfg: &DatalessConfig,
) -> Result<DatalessReport> {
    cfg.validate()?;
    let universe = tree.scored_labels();
    if gold.is_empty() {
        return Err(Error::Coverage("no gold-labeled documents".into()));
    }
    for (doc, labels) in gold {
        for label in labels {
            if !universe.contains(label) {
                return Err(Error::Invalid(format!(
                    "document {doc} carries label {label}, which is not a non-root tree label"
                )));
            }
        }
    }
    let unused = docs.keys().filter(|d| !gold.contains_key(*d)).count();
    if unused > 0 {
        log::warn!("{unused} documents have vectors but no gold labels; ignoring them");
    }

    let mut predictions: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut predictions_top1: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut empty_predictions = 0usize;
    let mut docs_without_vectors = Vec::new();
    for doc_id in gold.keys() {
        let (full, top1) = match docs.get(doc_id) {
            Some(vector) => {
                let sims = leaf_similarities(vector, tree, store, cfg)?;
                let full = match sims.first() {
                    Some(&(_, best)) if best > 0.0 => {
                        let threshold = cfg.delta * best;
                        let selected: Vec<&str> = sims
                            .iter()
                            .enumerate()
                            .filter(|&(rank, (_, sim))| rank == 0 || *sim >= threshold)
                            .map(|(_, (leaf, _))| leaf.as_str())
                            .collect();
                        paths_for_leaves(tree, &selected)
                    }
                    _ => Vec::new(),
                };
                let top1 = match sims.first() {
                    Some((leaf, sim)) if *sim > 0.0 => paths_for_leaves(tree, &[leaf.as_str()]),
                    _ => Vec::new(),
                };
                (full, top1)
            }
            None => {
                docs_without_vectors.push(doc_id.clone());
                (Vec::new(), Vec::new())
            }
        };
        if full.is_empty() {
            empty_predictions += 1;
        }
        predictions.insert(doc_id.clone(), full.into_iter().collect());
        predictions_top1.insert(doc_id.clone(), top1.into_iter().collect());
    }
    if !docs_without_vectors.is_empty() {
        log::warn!(
            "{} gold documents have no sparse vectors and predict nothing",
            docs_without_vectors.len()
        );
    }

    let scores = micro_macro_f1(&predictions, gold, &universe)?;
    let scores_top1 = micro_macro_f1(&predictions_top1, gold, &universe)?;
    Ok(DatalessReport {
        micro_f1: scores.micro,
        macro_f1: scores.macro_,
        micro_f1_at_1: scores_top1.micro,
        per_label: scores.per_label,
        documents: gold.len(),
        empty_predictions,
        docs_without_vectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::init_model;
    use crate::sparse::DEFAULT_ESA_SIZE;

    fn v(entries: &[(&str, f64)]) -> EsaVector {
        EsaVector::new(
            entries.iter().map(|(e, w)| (e.to_string(), *w)).collect(),
            DEFAULT_ESA_SIZE,
        )
        .unwrap()
    }

    fn uniform(ids: &[&str]) -> EsaVector {
        v(&ids.iter().map(|id| (*id, 1.0)).collect::<Vec<_>>())
    }

    /// Store with hand-set 2-D vectors; everything else is absent.
    fn store_with(vectors: &[(&str, [f64; 2])]) -> EmbeddingStore {
        let mut ids: Vec<String> = vectors.iter().map(|(id, _)| id.to_string()).collect();
        if ids.is_empty() {
            ids.push("unused_filler".to_string());
        }
        let mut store = init_model(ids, vec!["cat".to_string()], 2, 1).unwrap();
        for (id, vec2) in vectors {
            let row = store.entity_index(id).unwrap();
            store.entity_vector_mut(row).copy_from_slice(vec2);
        }
        store
    }

    #[test]
    fn identical_entities_are_similar_even_without_embeddings() {
        let store = store_with(&[("x", [1.0, 0.0])]);
        assert_eq!(entity_pair_similarity("ghost", "ghost", &store, 0.85), 1.0);
        assert_eq!(entity_pair_similarity("ghost", "x", &store, 0.85), 0.0);
    }

    #[test]
    fn cutoff_zeroes_low_similarities() {
        // cos((1,0), (0.8, 0.6)) = 0.8 < 0.85.
        let store = store_with(&[("a", [1.0, 0.0]), ("b", [0.8, 0.6])]);
        assert_eq!(entity_pair_similarity("a", "b", &store, 0.85), 0.0);
        let kept = entity_pair_similarity("a", "b", &store, 0.5);
        assert!((kept - 0.8).abs() < 1e-12);
    }

    #[test]
    fn parallel_vectors_are_exactly_similar() {
        let store = store_with(&[("a", [1.0, 0.0]), ("b", [2.0, 0.0])]);
        assert_eq!(entity_pair_similarity("a", "b", &store, 0.85), 1.0);
    }

    #[test]
    fn densified_of_identical_sets_is_one() {
        let store = store_with(&[]);
        let doc = uniform(&["u", "w", "x"]);
        let cfg = DatalessConfig::default();
        assert_eq!(densified_similarity(&doc, &doc, &store, &cfg).unwrap(), 1.0);
    }

    #[test]
    fn densified_of_dissimilar_sets_is_zero() {
        let store = store_with(&[]);
        let cfg = DatalessConfig::default();
        let a = uniform(&["p", "q"]);
        let b = uniform(&["r", "s", "t"]);
        assert_eq!(densified_similarity(&a, &b, &store, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn densified_matches_a_two_by_two_brute_force() {
        // doc {a, b}, label {a, c}: identity gives (a, a) = 1.0 and the
        // optimal partner (b, c) = cos((7,1), (5,3)) = 38 / sqrt(50 * 34).
        let store = store_with(&[("b", [7.0, 1.0]), ("c", [5.0, 3.0])]);
        let cfg = DatalessConfig::default();
        let doc = uniform(&["a", "b"]);
        let label = uniform(&["a", "c"]);
        let bc = 38.0 / 1700f64.sqrt();
        assert!(bc > 0.85);
        let got = densified_similarity(&doc, &label, &store, &cfg).unwrap();
        assert!((got - (1.0 + bc) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn densified_is_symmetric_for_square_matrices() {
        let store = store_with(&[("b", [7.0, 1.0]), ("c", [5.0, 3.0]), ("d", [6.9, 1.2])]);
        let cfg = DatalessConfig {
            cutoff: 0.5,
            ..DatalessConfig::default()
        };
        let x = uniform(&["a", "b", "d"]);
        let y = uniform(&["a", "c", "b"]);
        let xy = densified_similarity(&x, &y, &store, &cfg).unwrap();
        let yx = densified_similarity(&y, &x, &store, &cfg).unwrap();
        assert!((xy - yx).abs() < 1e-12);
    }

    #[test]
    fn weighted_average_uses_esa_weights() {
        let store = store_with(&[]);
        let cfg = DatalessConfig {
            weighted: true,
            ..DatalessConfig::default()
        };
        // Matches are the identity pairs (x, x) and (y, y); products 3*1 and
        // 1*2 weight two similarities of 1.0 → still 1.0.
        let doc = v(&[("x", 3.0), ("y", 1.0)]);
        let label = v(&[("x", 1.0), ("y", 2.0)]);
        assert_eq!(
            densified_similarity(&doc, &label, &store, &cfg).unwrap(),
            1.0
        );

        // One matched pair has similarity 0: weighted mean =
        // (3*1*1 + 0) / (3*1 + 1*2) = 0.6.
        let label2 = v(&[("x", 1.0), ("z", 2.0)]);
        let got = densified_similarity(&doc, &label2, &store, &cfg).unwrap();
        assert!((got - 0.6).abs() < 1e-15);
    }

    fn two_level_tree() -> LabelTree {
        LabelTree::from_nodes(vec![
            ("root".to_string(), None, EsaVector::default()),
            (
                "sci".to_string(),
                Some("root".to_string()),
                EsaVector::default(),
            ),
            (
                "arts".to_string(),
                Some("root".to_string()),
                EsaVector::default(),
            ),
            (
                "physics".to_string(),
                Some("sci".to_string()),
                uniform(&["quark", "lepton", "boson", "field"]),
            ),
            (
                "biology".to_string(),
                Some("sci".to_string()),
                uniform(&["cell", "gene", "protein", "enzyme"]),
            ),
            (
                "music".to_string(),
                Some("arts".to_string()),
                uniform(&["chord", "tempo", "melody", "rhythm"]),
            ),
        ])
        .unwrap()
    }

    #[test]
    fn tree_structure_is_validated() {
        let ok = two_level_tree();
        assert_eq!(ok.root(), "root");
        assert_eq!(
            ok.leaves().collect::<Vec<_>>(),
            vec!["biology", "music", "physics"]
        );
        assert_eq!(ok.node("physics").unwrap().depth, 2);
        assert_eq!(
            ok.path_excluding_root("physics").unwrap(),
            vec!["physics".to_string(), "sci".to_string()]
        );
        assert!(!ok.scored_labels().contains("root"));

        let two_roots = LabelTree::from_nodes(vec![
            ("r1".to_string(), None, uniform(&["a"])),
            ("r2".to_string(), None, uniform(&["b"])),
        ]);
        assert!(matches!(two_roots, Err(Error::Structure(_))));

        let cycle = LabelTree::from_nodes(vec![
            ("root".to_string(), None, uniform(&["a"])),
            ("x".to_string(), Some("y".to_string()), uniform(&["b"])),
            ("y".to_string(), Some("x".to_string()), uniform(&["c"])),
        ]);
        assert!(matches!(cycle, Err(Error::Structure(_))));

        let missing_parent = LabelTree::from_nodes(vec![(
            "a".to_string(),
            Some("nowhere".to_string()),
            uniform(&["x"]),
        )]);
        assert!(matches!(missing_parent, Err(Error::Structure(_))));

        let bare_leaf = LabelTree::from_nodes(vec![
            ("root".to_string(), None, EsaVector::default()),
            (
                "leaf".to_string(),
                Some("root".to_string()),
                EsaVector::default(),
            ),
        ]);
        assert!(matches!(bare_leaf, Err(Error::Structure(_))));
    }

    #[test]
    fn tree_file_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tree.tsv");
        std::fs::write(
            &path,
            "root\t-\t-\nsci\troot\t-\nphysics\tsci\tquark:1 boson:1\n",
        )
        .unwrap();
        let tree = LabelTree::load(&path, 500).unwrap();
        assert_eq!(tree.len(), 3);
        assert_eq!(tree.leaves().collect::<Vec<_>>(), vec!["physics"]);

        std::fs::write(&path, "root\t-\n").unwrap();
        assert!(matches!(
            LabelTree::load(&path, 500),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn bottom_up_selects_leaves_by_relative_threshold() {
        let tree = two_level_tree();
        let store = store_with(&[]);
        let cfg = DatalessConfig::default();

        // Exact physics overlap: its full path, nothing else.
        let doc = uniform(&["quark", "lepton", "boson", "field"]);
        let got = bottom_up_classify(&doc, &tree, &store, &cfg).unwrap();
        assert_eq!(got, vec!["physics".to_string(), "sci".to_string()]);

        // 2/4 overlap with biology = 0.5 < 0.95: argmax path only.
        let doc = uniform(&["quark", "lepton", "boson", "field", "cell", "gene"]);
        let got = bottom_up_classify(&doc, &tree, &store, &cfg).unwrap();
        assert_eq!(got, vec!["physics".to_string(), "sci".to_string()]);

        // Both fully overlapped: two leaf paths, deduplicated parent.
        let doc = uniform(&[
            "quark", "lepton", "boson", "field", "cell", "gene", "protein", "enzyme",
        ]);
        let got = bottom_up_classify(&doc, &tree, &store, &cfg).unwrap();
        assert_eq!(
            got,
            vec![
                "biology".to_string(),
                "sci".to_string(),
                "physics".to_string()
            ]
        );

        // No overlap anywhere: empty prediction.
        let doc = uniform(&["zzz"]);
        assert!(bottom_up_classify(&doc, &tree, &store, &cfg)
            .unwrap()
            .is_empty());

        // Top-1 keeps a single path even under full ties (biology wins the
        // id tie-break).
        let doc = uniform(&[
            "quark", "lepton", "boson", "field", "cell", "gene", "protein", "enzyme",
        ]);
        let got = bottom_up_classify_top1(&doc, &tree, &store, &cfg).unwrap();
        assert_eq!(got, vec!["biology".to_string(), "sci".to_string()]);
    }

    #[test]
    fn threshold_is_inclusive_at_exactly_delta_times_best() {
        // Leaves sized 20 and 25: overlaps give sims 1.0 and 0.96 ≥ 0.95,
        // then 1.0 and 0.90 < 0.95.
        let close: Vec<String> = (0..25).map(|i| format!("c{i}")).collect();
        let far: Vec<String> = (0..20).map(|i| format!("f{i}")).collect();
        let tree = LabelTree::from_nodes(vec![
            ("root".to_string(), None, EsaVector::default()),
            (
                "a".to_string(),
                Some("root".to_string()),
                uniform(&close.iter().map(|s| s.as_str()).collect::<Vec<_>>()),
            ),
            (
                "b".to_string(),
                Some("root".to_string()),
                uniform(&far.iter().map(|s| s.as_str()).collect::<Vec<_>>()),
            ),
        ])
        .unwrap();
        let store = store_with(&[]);
        let cfg = DatalessConfig::default();

        // Doc covering all of a plus 24/25 of... reverse: doc = 24 of a's
        // entities + all 20 of b's. sim(a) = 24/25 = 0.96, sim(b) = 1.0.
        let mut ids: Vec<&str> = close.iter().take(24).map(|s| s.as_str()).collect();
        ids.extend(far.iter().map(|s| s.as_str()));
        let doc = uniform(&ids);
        let got = bottom_up_classify(&doc, &tree, &store, &cfg).unwrap();
        assert_eq!(got, vec!["b".to_string(), "a".to_string()]);

        // sim(a) = 18/20 = 0.9 < 0.95 via a doc of 20 entities.
        let small: Vec<String> = (0..20).map(|i| format!("s{i}")).collect();
        let tree = LabelTree::from_nodes(vec![
            ("root".to_string(), None, EsaVector::default()),
            (
                "a".to_string(),
                Some("root".to_string()),
                uniform(
                    &small
                        .iter()
                        .take(18)
                        .map(|s| s.as_str())
                        .chain(["x1", "x2"])
                        .collect::<Vec<_>>(),
                ),
            ),
            (
                "b".to_string(),
                Some("root".to_string()),
                uniform(&small.iter().map(|s| s.as_str()).collect::<Vec<_>>()),
            ),
        ])
        .unwrap();
        let doc = uniform(&small.iter().map(|s| s.as_str()).collect::<Vec<_>>());
        let got = bottom_up_classify(&doc, &tree, &store, &cfg).unwrap();
        assert_eq!(got, vec!["b".to_string()]);
    }

    #[test]
    fn emitted_internal_labels_always_have_an_emitted_child() {
        let tree = two_level_tree();
        let store = store_with(&[]);
        let cfg = DatalessConfig::default();
        let doc = uniform(&["chord", "tempo", "quark", "melody", "rhythm"]);
        let got = bottom_up_classify(&doc, &tree, &store, &cfg).unwrap();
        let set: BTreeSet<&str> = got.iter().map(|s| s.as_str()).collect();
        for label in &got {
            if !tree.leaves().any(|l| l == label) {
                let has_child = tree.labels().any(|other| {
                    tree.node(other).unwrap().parent.as_deref() == Some(label)
                        && set.contains(other)
                });
                assert!(has_child, "{label} emitted without an emitted child");
            }
        }
    }

    fn sets(items: &[(&str, &[&str])]) -> BTreeMap<String, BTreeSet<String>> {
        items
            .iter()
            .map(|(d, ls)| (d.to_string(), ls.iter().map(|l| l.to_string()).collect()))
            .collect()
    }

    #[test]
    fn f1_reproduces_the_hand_computed_cases() {
        let universe: BTreeSet<String> = ["l1".to_string(), "l2".to_string()].into_iter().collect();
        // l1: TP=1 (d1), FP=1 (d2); l2: TP=1 (d3), FN=1 (d4).
        let predictions = sets(&[
            ("d1", &["l1"]),
            ("d2", &["l1"]),
            ("d3", &["l2"]),
            ("d4", &[]),
        ]);
        let gold = sets(&[
            ("d1", &["l1"]),
            ("d2", &[]),
            ("d3", &["l2"]),
            ("d4", &["l2"]),
        ]);
        let scores = micro_macro_f1(&predictions, &gold, &universe).unwrap();
        assert_eq!(scores.micro, 2.0 / 3.0);
        assert_eq!(scores.macro_, 2.0 / 3.0);
        assert_eq!(
            scores.per_label["l1"],
            ConfusionCounts {
                true_pos: 1,
                false_pos: 1,
                false_neg: 0
            }
        );

        // Perfect agreement.
        let scores = micro_macro_f1(&gold, &gold, &universe).unwrap();
        assert_eq!(scores.micro, 1.0);
        assert_eq!(scores.macro_, 1.0);

        // No predictions at all.
        let nothing = sets(&[("d1", &[]), ("d3", &[]), ("d4", &[])]);
        let scores = micro_macro_f1(&nothing, &gold, &universe).unwrap();
        assert_eq!(scores.micro, 0.0);
        assert_eq!(scores.macro_, 0.0);
    }

    #[test]
    fn f1_validates_universe() {
        let universe: BTreeSet<String> = ["l1".to_string()].into_iter().collect();
        let gold = sets(&[("d1", &["mystery"])]);
        assert!(matches!(
            micro_macro_f1(&gold, &gold, &universe),
            Err(Error::Invalid(_))
        ));
        assert!(matches!(
            micro_macro_f1(&gold, &gold, &BTreeSet::new()),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn micro_equals_macro_with_one_label() {
        let universe: BTreeSet<String> = ["only".to_string()].into_iter().collect();
        let predictions = sets(&[("d1", &["only"]), ("d2", &[]), ("d3", &["only"])]);
        let gold = sets(&[("d1", &["only"]), ("d2", &["only"]), ("d3", &[])]);
        let scores = micro_macro_f1(&predictions, &gold, &universe).unwrap();
        assert_eq!(scores.micro, scores.macro_);
    }

    #[test]
    fn end_to_end_evaluation_scores_planted_documents() {
        let tree = two_level_tree();
        let store = store_with(&[]);
        let cfg = DatalessConfig::default();
        let mut docs = BTreeMap::new();
        docs.insert(
            "doc_phys".to_string(),
            uniform(&["quark", "lepton", "boson", "field"]),
        );
        docs.insert(
            "doc_music".to_string(),
            uniform(&["chord", "tempo", "melody", "rhythm"]),
        );
        let gold = sets(&[
            ("doc_phys", &["physics", "sci"]),
            ("doc_music", &["music", "arts"]),
            ("doc_lost", &["biology", "sci"]),
        ]);
        let report = evaluate_dataless(&docs, &gold, &tree, &store, &cfg).unwrap();
        assert_eq!(report.documents, 3);
        assert_eq!(report.docs_without_vectors, vec!["doc_lost".to_string()]);
        assert_eq!(report.empty_predictions, 1);
        // 4 TP, 0 FP, 2 FN: micro = 8 / (8 + 0 + 2) = 0.8.
        assert_eq!(report.micro_f1, 0.8);
        assert_eq!(report.micro_f1_at_1, 0.8);
        assert!(report.macro_f1 > 0.0);

        let bad_gold = sets(&[("doc_phys", &["root"])]);
        assert!(matches!(
            evaluate_dataless(&docs, &bad_gold, &tree, &store, &cfg),
            Err(Error::Invalid(_))
        ));
    }
}
