//! Seeded generators for planted-structure datasets.
//!
//! Both generators draw each entity's context list from a mixture that
//! favors the entity's own group: the group is sampled with weight
//! `within_weight` for the entity's own and `cross_weight` for each other
//! group, then a uniform member of that group other than the entity itself.
//! The flat generator plants groups at the category level; the taxonomy
//! generator plants them at the *parent* level, so sibling leaf categories
//! share context statistics and only the hierarchy tells them apart.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;

use crate::categorize::GoldStandard;
use crate::corpus::{CorpusReport, TrainingCorpus};
use crate::error::Result;
use crate::fileio;
use crate::hierarchy::{load_hierarchy, CategoryDag};

/// A flat planted dataset: `categories` disjoint groups of entities.
#[derive(Debug, Clone)]
pub struct FlatSpec {
    pub categories: usize,
    pub entities_per_category: usize,
    pub contexts_per_entity: usize,
    /// Mixture weight of the entity's own category.
    pub within_weight: f64,
    /// Mixture weight of each other category.
    pub cross_weight: f64,
    pub seed: u64,
}

impl Default for FlatSpec {
    fn default() -> Self {
        FlatSpec {
            categories: 5,
            entities_per_category: 20,
            contexts_per_entity: 500,
            within_weight: 0.9,
            cross_weight: 0.02,
            seed: 1,
        }
    }
}

/// A 3-level planted taxonomy: parents, `leaves_per_parent` leaf categories
/// each, `entities_per_leaf` entities per leaf. Context statistics depend
/// only on the parent.
#[derive(Debug, Clone)]
pub struct TaxonomySpec {
    pub parents: usize,
    pub leaves_per_parent: usize,
    pub entities_per_leaf: usize,
    pub contexts_per_entity: usize,
    /// Mixture weight of the entity's own parent block.
    pub within_weight: f64,
    /// Mixture weight of each other parent block.
    pub cross_weight: f64,
    pub seed: u64,
}

impl Default for TaxonomySpec {
    fn default() -> Self {
        TaxonomySpec {
            parents: 3,
            leaves_per_parent: 3,
            entities_per_leaf: 10,
            contexts_per_entity: 200,
            within_weight: 0.9,
            cross_weight: 0.02,
            seed: 1,
        }
    }
}

/// Generated corpus records plus the matching hierarchy and gold groupings.
#[derive(Debug, Clone)]
pub struct SynthData {
    /// Corpus records, one per entity: (target, contexts).
    pub records: Vec<(String, Vec<String>)>,
    /// `(child, parent)` category edges; empty for flat data.
    pub edges: Vec<(String, String)>,
    /// `(entity, category)` direct labels.
    pub labels: Vec<(String, String)>,
    /// `(class, concept)` rows grouping entities by direct category.
    pub gold: Vec<(String, String)>,
    /// `(class, concept)` rows grouping entities by parent category; empty
    /// for flat data.
    pub coarse_gold: Vec<(String, String)>,
}

impl SynthData {
    pub fn corpus(&self) -> (TrainingCorpus, CorpusReport) {
        TrainingCorpus::from_records(self.records.clone())
    }

    pub fn dag(&self) -> CategoryDag {
        load_hierarchy(self.edges.clone(), self.labels.clone())
            .expect("generated hierarchy records are well-formed")
            .0
    }

    pub fn gold_standard(&self) -> GoldStandard {
        GoldStandard::from_pairs(self.gold.clone()).expect("generated gold rows are consistent")
    }

    pub fn coarse_gold_standard(&self) -> GoldStandard {
        GoldStandard::from_pairs(self.coarse_gold.clone())
            .expect("generated gold rows are consistent")
    }
}

/// Draws `count` contexts for the entity at `(own_group, own_pos)`.
/// `groups[g]` lists the member ids of group `g`.
fn draw_contexts(
    rng: &mut ChaCha8Rng,
    groups: &[Vec<String>],
    picker: &WeightedIndex<f64>,
    own_group: usize,
    own_pos: usize,
    count: usize,
) -> Vec<String> {
    let mut contexts = Vec::with_capacity(count);
    for _ in 0..count {
        let g = picker.sample(rng);
        let members = &groups[g];
        let id = if g == own_group {
            // Uniform over the other members.
            let mut pos = rng.gen_range(0..members.len() - 1);
            if pos >= own_pos {
                pos += 1;
            }
            &members[pos]
        } else {
            &members[rng.gen_range(0..members.len())]
        };
        contexts.push(id.clone());
    }
    contexts
}

fn group_picker(groups: usize, own: usize, within: f64, cross: f64) -> WeightedIndex<f64> {
    let mut weights = vec![cross; groups];
    weights[own] = within;
    WeightedIndex::new(weights).expect("mixture weights are positive")
}

pub fn flat_planted(spec: &FlatSpec) -> SynthData {
    assert!(spec.categories >= 2 && spec.entities_per_category >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let groups: Vec<Vec<String>> = (0..spec.categories)
        .map(|c| {
            (0..spec.entities_per_category)
                .map(|i| format!("topic{c}_item{i:02}"))
                .collect()
        })
        .collect();

    let mut data = SynthData {
        records: Vec::new(),
        edges: Vec::new(),
        labels: Vec::new(),
        gold: Vec::new(),
        coarse_gold: Vec::new(),
    };
    for (c, members) in groups.iter().enumerate() {
        let category = format!("topic{c}");
        let picker = group_picker(spec.categories, c, spec.within_weight, spec.cross_weight);
        for (pos, entity) in members.iter().enumerate() {
            let contexts =
                draw_contexts(&mut rng, &groups, &picker, c, pos, spec.contexts_per_entity);
            data.records.push((entity.clone(), contexts));
            data.labels.push((entity.clone(), category.clone()));
            data.gold.push((category.clone(), entity.clone()));
        }
    }
    data
}

pub fn taxonomy_planted(spec: &TaxonomySpec) -> SynthData {
    assert!(spec.parents >= 2 && spec.leaves_per_parent >= 1);
    assert!(spec.entities_per_leaf * spec.leaves_per_parent >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    // One group per parent, covering all entities below it.
    let groups: Vec<Vec<String>> = (0..spec.parents)
        .map(|p| {
            (0..spec.leaves_per_parent)
                .flat_map(|l| {
                    (0..spec.entities_per_leaf).map(move |i| format!("area{p}_field{l}_item{i:02}"))
                })
                .collect()
        })
        .collect();

    let mut data = SynthData {
        records: Vec::new(),
        edges: Vec::new(),
        labels: Vec::new(),
        gold: Vec::new(),
        coarse_gold: Vec::new(),
    };
    for p in 0..spec.parents {
        let parent = format!("area{p}");
        let picker = group_picker(spec.parents, p, spec.within_weight, spec.cross_weight);
        for l in 0..spec.leaves_per_parent {
            let leaf = format!("area{p}_field{l}");
            data.edges.push((leaf.clone(), parent.clone()));
            for i in 0..spec.entities_per_leaf {
                let entity = format!("area{p}_field{l}_item{i:02}");
                let pos = l * spec.entities_per_leaf + i;
                let contexts =
                    draw_contexts(&mut rng, &groups, &picker, p, pos, spec.contexts_per_entity);
                data.records.push((entity.clone(), contexts));
                data.labels.push((entity.clone(), leaf.clone()));
                data.gold.push((leaf.clone(), entity.clone()));
                data.coarse_gold.push((parent.clone(), entity));
            }
        }
    }
    data
}

/// Writes corpus records as `target<TAB>ctx1 ctx2 ...` lines.
pub fn write_corpus_file(records: &[(String, Vec<String>)], path: &Path) -> Result<()> {
    use std::io::Write;
    let mut w = fileio::create(path)?;
    for (target, contexts) in records {
        let line = format!("{target}\t{}", contexts.join(" "));
        writeln!(w, "{line}")
            .map_err(|e| crate::error::Error::io(path.display().to_string(), e))?;
    }
    fileio::finish(w, path)
}

/// Writes `(child, parent)` rows as `child<TAB>parent` lines.
pub fn write_edge_file(edges: &[(String, String)], path: &Path) -> Result<()> {
    write_tsv2(edges, path)
}

/// Writes `(entity, category)` rows as `entity<TAB>category` lines.
pub fn write_label_file(labels: &[(String, String)], path: &Path) -> Result<()> {
    write_tsv2(labels, path)
}

/// Writes `(class, concept)` rows as `class<TAB>concept` lines.
pub fn write_gold_file(rows: &[(String, String)], path: &Path) -> Result<()> {
    write_tsv2(rows, path)
}

fn write_tsv2(rows: &[(String, String)], path: &Path) -> Result<()> {
    use std::io::Write;
    let mut w = fileio::create(path)?;
    for (a, b) in rows {
        writeln!(w, "{a}\t{b}")
            .map_err(|e| crate::error::Error::io(path.display().to_string(), e))?;
    }
    fileio::finish(w, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn flat_data_is_deterministic_and_sized() {
        let spec = FlatSpec {
            contexts_per_entity: 50,
            ..FlatSpec::default()
        };
        let a = flat_planted(&spec);
        let b = flat_planted(&spec);
        assert_eq!(a.records, b.records);
        assert_eq!(a.records.len(), 100);
        assert!(a.records.iter().all(|(_, ctx)| ctx.len() == 50));
        assert!(a.edges.is_empty());
        assert_eq!(a.labels.len(), 100);
        let (corpus, report) = a.corpus();
        assert_eq!(corpus.pair_count(), 5000);
        assert_eq!(report.skipped_empty_records, 0);
        assert_eq!(a.gold_standard().class_count(), 5);
    }

    #[test]
    fn flat_contexts_mostly_stay_in_category() {
        let data = flat_planted(&FlatSpec {
            contexts_per_entity: 200,
            ..FlatSpec::default()
        });
        let mut within = 0usize;
        let mut total = 0usize;
        for (target, contexts) in &data.records {
            let own = &target[..6]; // topicC prefix
            for ctx in contexts {
                total += 1;
                if ctx.starts_with(own) {
                    within += 1;
                }
            }
        }
        let rate = within as f64 / total as f64;
        // Expected rate 0.9/0.98; allow generous sampling noise.
        assert!(rate > 0.85 && rate < 0.97, "within rate {rate}");
        // No entity co-occurs with itself.
        for (target, contexts) in &data.records {
            assert!(contexts.iter().all(|c| c != target));
        }
    }

    #[test]
    fn taxonomy_blocks_ignore_leaf_boundaries() {
        let spec = TaxonomySpec {
            contexts_per_entity: 300,
            ..TaxonomySpec::default()
        };
        let data = taxonomy_planted(&spec);
        assert_eq!(data.records.len(), 90);
        assert_eq!(data.edges.len(), 9);
        assert_eq!(data.gold_standard().class_count(), 9);
        assert_eq!(data.coarse_gold_standard().class_count(), 3);

        // Within one parent block, every co-member leaf appears as context
        // roughly equally: count contexts by leaf for one entity's record.
        let (target, contexts) = &data.records[0];
        assert_eq!(target, "area0_field0_item00");
        let mut by_leaf: BTreeMap<&str, usize> = BTreeMap::new();
        for ctx in contexts {
            if ctx.starts_with("area0") {
                *by_leaf.entry(&ctx[..12]).or_default() += 1;
            }
        }
        assert_eq!(by_leaf.len(), 3, "all sibling leaves appear as context");

        let dag = data.dag();
        let weights = dag.ancestor_weights("area0_field0_item00").unwrap();
        assert_eq!(weights.weight_of("area0_field0"), Some(2.0 / 3.0));
        assert_eq!(weights.weight_of("area0"), Some(1.0 / 3.0));
    }

    #[test]
    fn written_files_parse_back() {
        let dir = tempfile::tempdir().unwrap();
        let data = flat_planted(&FlatSpec {
            categories: 2,
            entities_per_category: 3,
            contexts_per_entity: 5,
            ..FlatSpec::default()
        });
        let corpus_path = dir.path().join("corpus.tsv");
        write_corpus_file(&data.records, &corpus_path).unwrap();
        let records = crate::corpus::read_corpus_file(&corpus_path).unwrap();
        assert_eq!(records, data.records);

        let labels_path = dir.path().join("labels.tsv");
        write_label_file(&data.labels, &labels_path).unwrap();
        assert_eq!(
            crate::hierarchy::read_label_file(&labels_path).unwrap(),
            data.labels
        );

        let gold_path = dir.path().join("gold.tsv");
        write_gold_file(&data.gold, &gold_path).unwrap();
        let gold = GoldStandard::load(&gold_path).unwrap();
        assert_eq!(gold.n(), 6);
    }
}
