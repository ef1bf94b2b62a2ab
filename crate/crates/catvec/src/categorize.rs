//! Concept categorization: cluster entity vectors, or classify them against
//! category vectors, and score both with purity.
//!
//! The gold standard is a flat class-per-concept labeling. Evaluation splits
//! it 50/50 per class into validation and test halves, runs a small grid of
//! clustering configurations (or the single nearest-neighbor cell) on the
//! validation half, and reports the test purity of the best validation cell.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::EmbeddingStore;
use crate::error::{Error, Result};
use crate::fileio;

/// Distance used by clustering and nearest-neighbor classification.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Euclidean,
    Cosine,
}

impl Metric {
    /// Distance between two equal-length vectors. Cosine distance treats a
    /// zero-norm vector as dissimilar to everything (similarity 0).
    pub fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            Metric::Cosine => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                if na == 0.0 || nb == 0.0 {
                    1.0
                } else {
                    1.0 - dot / (na * nb)
                }
            }
        }
    }
}

impl std::fmt::Display for Metric {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Metric::Euclidean => "euclidean",
            Metric::Cosine => "cosine",
        })
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "cosine" => Ok(Metric::Cosine),
            other => Err(Error::Config(format!(
                "unknown metric {other:?}; use euclidean or cosine"
            ))),
        }
    }
}

/// Linkage criterion for agglomerative clustering.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linkage {
    Complete,
    Average,
}

impl std::fmt::Display for Linkage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Linkage::Complete => "complete",
            Linkage::Average => "average",
        })
    }
}

impl std::str::FromStr for Linkage {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            other => Err(Error::Config(format!(
                "unknown linkage {other:?}; use complete or average"
            ))),
        }
    }
}

/// Flat gold labeling: every concept belongs to exactly one class. Concepts
/// may carry an optional subset tag (third dataset column).
#[derive(Debug, Clone, Default)]
pub struct GoldStandard {
    classes: BTreeMap<String, BTreeSet<String>>,
    class_of: BTreeMap<String, String>,
    tags: BTreeMap<String, String>,
}

impl GoldStandard {
    /// Number of concepts.
    pub fn n(&self) -> usize {
        self.class_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_of.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn classes(&self) -> impl Iterator<Item = (&str, &BTreeSet<String>)> {
        self.classes.iter().map(|(c, m)| (c.as_str(), m))
    }

    pub fn concepts(&self) -> impl Iterator<Item = &str> {
        self.class_of.keys().map(|c| c.as_str())
    }

    pub fn class_of(&self, concept: &str) -> Option<&str> {
        self.class_of.get(concept).map(|c| c.as_str())
    }

    pub fn tag_of(&self, concept: &str) -> Option<&str> {
        self.tags.get(concept).map(|t| t.as_str())
    }

    fn insert(&mut self, class: &str, concept: &str, tag: Option<&str>) -> Result<()> {
        match self.class_of.get(concept) {
            Some(existing) if existing != class => {
                return Err(Error::Invalid(format!(
                    "concept {concept} assigned to both {existing} and {class}"
                )));
            }
            Some(_) => return Ok(()), // duplicate row, same class
            None => {}
        }
        self.class_of.insert(concept.to_string(), class.to_string());
        self.classes
            .entry(class.to_string())
            .or_default()
            .insert(concept.to_string());
        if let Some(tag) = tag {
            self.tags.insert(concept.to_string(), tag.to_string());
        }
        Ok(())
    }

    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut gold = GoldStandard::default();
        for (class, concept) in pairs {
            gold.insert(&class, &concept, None)?;
        }
        Ok(gold)
    }

    /// Reads `class<TAB>concept[<TAB>tag]` lines.
    pub fn load(path: &Path) -> Result<Self> {
        let name = path.display().to_string();
        let mut gold = GoldStandard::default();
        for (line_no, line) in fileio::data_lines(path)? {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() < 2 || fields.len() > 3 {
                return Err(Error::parse(
                    &name,
                    line_no,
                    "expected class<TAB>concept with an optional tag column".to_string(),
                ));
            }
            for f in &fields {
                if f.is_empty() || f.chars().any(char::is_whitespace) {
                    return Err(Error::parse(&name, line_no, format!("bad field {f:?}")));
                }
            }
            gold.insert(fields[0], fields[1], fields.get(2).copied())
                .map_err(|e| Error::parse(&name, line_no, e.to_string()))?;
        }
        Ok(gold)
    }

    /// Keeps only concepts carrying the given subset tag.
    pub fn subset(&self, tag: &str) -> GoldStandard {
        self.filtered(|c| self.tag_of(c) == Some(tag))
    }

    /// Keeps only the listed concepts.
    pub fn restrict_to(&self, keep: &BTreeSet<String>) -> GoldStandard {
        self.filtered(|c| keep.contains(c))
    }

    fn filtered(&self, keep: impl Fn(&str) -> bool) -> GoldStandard {
        let mut gold = GoldStandard::default();
        for (concept, class) in &self.class_of {
            if keep(concept) {
                gold.insert(class, concept, self.tags.get(concept).map(|t| t.as_str()))
                    .expect("filtering cannot introduce conflicts");
            }
        }
        gold
    }

    /// Splits 50/50 per class into (validation, test). Classes with an odd
    /// member count put the extra concept in the validation half. The same
    /// seed always produces the same split.
    pub fn split_stratified(&self, seed: u64) -> (GoldStandard, GoldStandard) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut validation = GoldStandard::default();
        let mut test = GoldStandard::default();
        for (class, members) in &self.classes {
            let mut members: Vec<&String> = members.iter().collect();
            members.shuffle(&mut rng);
            let cut = members.len().div_ceil(2);
            for (i, concept) in members.into_iter().enumerate() {
                let half = if i < cut { &mut validation } else { &mut test };
                half.insert(class, concept, self.tags.get(concept).map(|t| t.as_str()))
                    .expect("splitting cannot introduce conflicts");
            }
        }
        (validation, test)
    }
}

/// A clustering of concepts, with a descriptor of how it was produced.
#[derive(Debug, Clone)]
pub struct ClusteringResult {
    pub clusters: Vec<BTreeSet<String>>,
    pub method: String,
}

fn check_vectors(vectors: &BTreeMap<String, Vec<f64>>) -> Result<usize> {
    let mut dim = None;
    for (id, v) in vectors {
        match dim {
            None => dim = Some(v.len()),
            Some(d) if d != v.len() => {
                return Err(Error::Invalid(format!(
                    "vector for {id} has {} dimensions, expected {d}",
                    v.len()
                )));
            }
            Some(_) => {}
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid(format!("vector for {id} is not finite")));
        }
    }
    dim.ok_or_else(|| Error::Invalid("no vectors to cluster".into()))
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Lloyd's algorithm with seeded k-means++ initialization. Converges when
/// assignments stabilize or after `max_iters` passes; a cluster that empties
/// out is reseeded from the point farthest from its own center. Clusters
/// that stay empty (possible with duplicate points) are dropped from the
/// result.
pub fn kmeans(
    vectors: &BTreeMap<String, Vec<f64>>,
    k: usize,
    seed: u64,
    max_iters: usize,
) -> Result<ClusteringResult> {
    check_vectors(vectors)?;
    let n = vectors.len();
    if k == 0 {
        return Err(Error::Config("k must be positive".into()));
    }
    if k > n {
        return Err(Error::Config(format!("k = {k} exceeds {n} concepts")));
    }
    let ids: Vec<&String> = vectors.keys().collect();
    let points: Vec<&[f64]> = ids.iter().map(|id| vectors[*id].as_slice()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Vec<f64>> = Vec::with_capacity(k);
    centers.push(points[rng.gen_range(0..n)].to_vec());
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut x = rng.gen::<f64>() * total;
            let mut pick = n - 1;
            for (i, &w) in d2.iter().enumerate() {
                if x < w {
                    pick = i;
                    break;
                }
                x -= w;
            }
            pick
        } else {
            rng.gen_range(0..n)
        };
        centers.push(points[next].to_vec());
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, centers.last().unwrap()));
        }
    }

    let assign_all = |centers: &[Vec<f64>]| -> Vec<usize> {
        points
            .iter()
            .map(|p| {
                let mut best = 0usize;
                let mut best_d = f64::INFINITY;
                for (c, center) in centers.iter().enumerate() {
                    let d = sq_dist(p, center);
                    if d < best_d {
                        best_d = d;
                        best = c;
                    }
                }
                best
            })
            .collect()
    };

    let mut assign = assign_all(&centers);
    for _ in 0..max_iters {
        // Recompute means.
        let dim = points[0].len();
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, &c) in assign.iter().enumerate() {
            counts[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(points[i]) {
                *s += v;
            }
        }
        let mut point_d2: Vec<f64> = assign
            .iter()
            .enumerate()
            .map(|(i, &c)| sq_dist(points[i], &centers[c]))
            .collect();
        for c in 0..k {
            if counts[c] > 0 {
                for (slot, s) in centers[c].iter_mut().zip(&sums[c]) {
                    *slot = s / counts[c] as f64;
                }
            } else {
                // Reseed from the point farthest from its current center.
                let far = point_d2
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(b.0.cmp(&a.0)))
                    .map(|(i, _)| i)
                    .unwrap();
                centers[c] = points[far].to_vec();
                point_d2[far] = 0.0;
            }
        }
        let next = assign_all(&centers);
        if next == assign {
            break;
        }
        assign = next;
    }

    let mut clusters = vec![BTreeSet::new(); k];
    for (i, &c) in assign.iter().enumerate() {
        clusters[c].insert(ids[i].clone());
    }
    clusters.retain(|c| !c.is_empty());
    Ok(ClusteringResult {
        clusters,
        method: format!("kmeans k={k} seed={seed}"),
    })
}

/// Bottom-up merging until `k` clusters remain, O(n^3) via the standard
/// recurrences for complete and average linkage. Equal merge distances are
/// broken by the smallest pair of cluster representatives, a cluster's
/// representative being its lexicographically smallest member.
pub fn agglomerative(
    vectors: &BTreeMap<String, Vec<f64>>,
    k: usize,
    metric: Metric,
    linkage: Linkage,
) -> Result<ClusteringResult> {
    check_vectors(vectors)?;
    let n = vectors.len();
    if k == 0 {
        return Err(Error::Config("k must be positive".into()));
    }
    if k > n {
        return Err(Error::Config(format!("k = {k} exceeds {n} concepts")));
    }
    let ids: Vec<&String> = vectors.keys().collect();
    let points: Vec<&[f64]> = ids.iter().map(|id| vectors[*id].as_slice()).collect();

    // Sorted ids make index order equal lexicographic order, so the
    // representative of the cluster rooted at row r is just r.
    let mut dist = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = metric.distance(points[i], points[j]);
            dist[i][j] = d;
            dist[j][i] = d;
        }
    }
    let mut active = vec![true; n];
    let mut members: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut remaining = n;
    while remaining > k {
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..n {
            if !active[a] {
                continue;
            }
            for b in (a + 1)..n {
                if !active[b] {
                    continue;
                }
                if best.is_none_or(|(d, _, _)| dist[a][b] < d) {
                    best = Some((dist[a][b], a, b));
                }
            }
        }
        let (_, a, b) = best.expect("at least two active clusters");
        let (sa, sb) = (members[a].len() as f64, members[b].len() as f64);
        for c in 0..n {
            if !active[c] || c == a || c == b {
                continue;
            }
            let merged = match linkage {
                Linkage::Complete => dist[a][c].max(dist[b][c]),
                Linkage::Average => (sa * dist[a][c] + sb * dist[b][c]) / (sa + sb),
            };
            dist[a][c] = merged;
            dist[c][a] = merged;
        }
        let moved = std::mem::take(&mut members[b]);
        members[a].extend(moved);
        active[b] = false;
        remaining -= 1;
    }

    let clusters: Vec<BTreeSet<String>> = (0..n)
        .filter(|&r| active[r])
        .map(|r| members[r].iter().map(|&i| ids[i].clone()).collect())
        .collect();
    Ok(ClusteringResult {
        clusters,
        method: format!("agglomerative {metric} {linkage} k={k}"),
    })
}

/// Fraction of concepts sitting in their cluster's majority class:
/// `(1/n) * sum_k max_j |cluster_k intersect class_j|`, where `n` counts the
/// gold concepts. Every clustered concept must be in the gold standard.
pub fn purity(clusters: &[BTreeSet<String>], gold: &GoldStandard) -> Result<f64> {
    if clusters.iter().all(|c| c.is_empty()) {
        return Err(Error::Invalid("purity of an empty clustering".into()));
    }
    if gold.is_empty() {
        return Err(Error::Invalid(
            "purity against an empty gold standard".into(),
        ));
    }
    let mut agreeing = 0usize;
    for cluster in clusters {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for concept in cluster {
            let class = gold.class_of(concept).ok_or_else(|| {
                Error::Invalid(format!(
                    "clustered concept {concept} is not in the gold standard"
                ))
            })?;
            *counts.entry(class).or_insert(0) += 1;
        }
        agreeing += counts.values().max().copied().unwrap_or(0);
    }
    Ok(agreeing as f64 / gold.n() as f64)
}

/// Assigns every concept to the category with the nearest vector. Ties pick
/// the lexicographically smallest category id.
pub fn nn_classify(
    concepts: &BTreeMap<String, Vec<f64>>,
    categories: &BTreeMap<String, Vec<f64>>,
    metric: Metric,
) -> Result<BTreeMap<String, String>> {
    if categories.is_empty() {
        return Err(Error::Config("no candidate categories".into()));
    }
    let cat_dim = check_vectors(categories)?;
    for (id, v) in concepts {
        if v.len() != cat_dim {
            return Err(Error::Invalid(format!(
                "concept {id} has {} dimensions but categories have {cat_dim}",
                v.len()
            )));
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Invalid(format!("vector for {id} is not finite")));
        }
    }
    let mut out = BTreeMap::new();
    for (id, v) in concepts {
        let mut best: Option<(f64, &str)> = None;
        for (cid, cv) in categories {
            let d = metric.distance(v, cv);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, cid));
            }
        }
        out.insert(id.clone(), best.unwrap().1.to_string());
    }
    Ok(out)
}

/// Groups concepts by their predicted category, yielding the partition whose
/// purity scores a classification.
pub fn induced_partition(predictions: &BTreeMap<String, String>) -> Vec<BTreeSet<String>> {
    let mut groups: BTreeMap<&str, BTreeSet<String>> = BTreeMap::new();
    for (concept, class) in predictions {
        groups.entry(class).or_default().insert(concept.clone());
    }
    groups.into_values().collect()
}

/// Evaluation protocol: unsupervised clustering or nearest-neighbor
/// classification against category vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Cluster,
    Nn,
}

impl std::fmt::Display for Protocol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Protocol::Cluster => "cluster",
            Protocol::Nn => "nn",
        })
    }
}

impl std::str::FromStr for Protocol {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cluster" => Ok(Protocol::Cluster),
            "nn" => Ok(Protocol::Nn),
            other => Err(Error::Config(format!(
                "unknown protocol {other:?}; use cluster or nn"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ConceptEvalConfig {
    pub protocol: Protocol,
    /// Metric for nearest-neighbor classification (the clustering grid
    /// always covers both).
    pub metric: Metric,
    pub split_seed: u64,
    pub kmeans_max_iters: usize,
}

impl Default for ConceptEvalConfig {
    fn default() -> Self {
        ConceptEvalConfig {
            protocol: Protocol::Cluster,
            metric: Metric::Euclidean,
            split_seed: 1,
            kmeans_max_iters: 100,
        }
    }
}

/// One grid cell's validation score.
#[derive(Debug, Clone)]
pub struct CellReport {
    pub name: String,
    pub validation_purity: f64,
}

/// Outcome of a concept-categorization evaluation.
#[derive(Debug, Clone)]
pub struct ConceptReport {
    pub cells: Vec<CellReport>,
    pub best_cell: String,
    pub best_validation_purity: f64,
    /// Test purity of the best validation cell.
    pub test_purity: f64,
    /// Dataset concepts missing from the embedding store, skipped.
    pub skipped: Vec<String>,
    pub validation_size: usize,
    pub test_size: usize,
}

fn gather_vectors(
    store: &EmbeddingStore,
    concepts: impl Iterator<Item = impl AsRef<str>>,
) -> (BTreeMap<String, Vec<f64>>, Vec<String>) {
    let mut found = BTreeMap::new();
    let mut missing = Vec::new();
    for concept in concepts {
        let concept = concept.as_ref();
        match store.entity_vector_by_id(concept) {
            Some(v) => {
                found.insert(concept.to_string(), v.to_vec());
            }
            None => missing.push(concept.to_string()),
        }
    }
    (found, missing)
}

fn cluster_cell(
    name: &str,
    vectors: &BTreeMap<String, Vec<f64>>,
    gold: &GoldStandard,
    cfg: &ConceptEvalConfig,
) -> Result<f64> {
    let k = gold.class_count();
    let result = match name {
        "kmeans" => kmeans(vectors, k, cfg.split_seed, cfg.kmeans_max_iters)?,
        _ => {
            let mut parts = name.split('-');
            parts.next(); // "agglomerative"
            let metric: Metric = parts.next().unwrap().parse()?;
            let linkage: Linkage = parts.next().unwrap().parse()?;
            agglomerative(vectors, k, metric, linkage)?
        }
    };
    purity(&result.clusters, gold)
}

const CLUSTER_CELLS: [&str; 5] = [
    "kmeans",
    "agglomerative-euclidean-complete",
    "agglomerative-euclidean-average",
    "agglomerative-cosine-complete",
    "agglomerative-cosine-average",
];

/// Splits the gold standard, scores the configuration grid on the validation
/// half, and reports the test purity of the best validation cell. Concepts
/// missing from the store are skipped (all missing is a coverage error); for
/// the nn protocol every gold class must have a category vector.
pub fn evaluate_concepts(
    store: &EmbeddingStore,
    gold: &GoldStandard,
    cfg: &ConceptEvalConfig,
) -> Result<ConceptReport> {
    let (vectors, skipped) = gather_vectors(store, gold.concepts());
    if vectors.is_empty() {
        return Err(Error::Coverage(format!(
            "none of the {} dataset concepts appear in the embedding store",
            gold.n()
        )));
    }
    let present: BTreeSet<String> = vectors.keys().cloned().collect();
    let gold = gold.restrict_to(&present);
    let (val_gold, test_gold) = gold.split_stratified(cfg.split_seed);
    if test_gold.is_empty() {
        return Err(Error::Coverage(
            "test split is empty; the dataset is too small to halve".into(),
        ));
    }
    let pick = |half: &GoldStandard| -> BTreeMap<String, Vec<f64>> {
        half.concepts()
            .map(|c| (c.to_string(), vectors[c].clone()))
            .collect()
    };
    let val_vectors = pick(&val_gold);
    let test_vectors = pick(&test_gold);

    let (cells, best_cell, best_validation_purity, test_purity) = match cfg.protocol {
        Protocol::Cluster => {
            let mut cells = Vec::new();
            for name in CLUSTER_CELLS {
                let p = cluster_cell(name, &val_vectors, &val_gold, cfg)?;
                cells.push(CellReport {
                    name: name.to_string(),
                    validation_purity: p,
                });
            }
            let best = cells
                .iter()
                .enumerate()
                .max_by(|a, b| {
                    a.1.validation_purity
                        .partial_cmp(&b.1.validation_purity)
                        .unwrap()
                        .then(b.0.cmp(&a.0))
                })
                .map(|(_, c)| c.name.clone())
                .unwrap();
            let best_val = cells
                .iter()
                .find(|c| c.name == best)
                .unwrap()
                .validation_purity;
            let test = cluster_cell(&best, &test_vectors, &test_gold, cfg)?;
            (cells, best, best_val, test)
        }
        Protocol::Nn => {
            let mut categories = BTreeMap::new();
            let mut missing = Vec::new();
            for (class, _) in gold.classes() {
                match store.category_vector_by_id(class) {
                    Some(v) => {
                        categories.insert(class.to_string(), v.to_vec());
                    }
                    None => missing.push(class.to_string()),
                }
            }
            if !missing.is_empty() {
                return Err(Error::Coverage(format!(
                    "gold classes without category vectors: {}",
                    missing.join(", ")
                )));
            }
            let score = |vecs: &BTreeMap<String, Vec<f64>>, half: &GoldStandard| -> Result<f64> {
                let pred = nn_classify(vecs, &categories, cfg.metric)?;
                purity(&induced_partition(&pred), half)
            };
            let val = score(&val_vectors, &val_gold)?;
            let test = score(&test_vectors, &test_gold)?;
            let name = format!("nn-{}", cfg.metric);
            let cells = vec![CellReport {
                name: name.clone(),
                validation_purity: val,
            }];
            (cells, name, val, test)
        }
    };

    Ok(ConceptReport {
        cells,
        best_cell,
        best_validation_purity,
        test_purity,
        skipped,
        validation_size: val_gold.n(),
        test_size: test_gold.n(),
    })
}
