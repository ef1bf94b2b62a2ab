//! Category hierarchy support: a DAG of categories plus entity labels.
//!
//! Edge records are `(child, parent)` pairs between categories; label records
//! attach entities to their direct categories. Raw category graphs scraped
//! from real knowledge bases contain cycles, so loading repairs them
//! deterministically before anything else runs. The other half of this module
//! computes, per entity, the upward closure of its direct categories and an
//! inverse-distance weight for every ancestor; those weights drive the
//! hierarchy-aware trainer.

use std::collections::VecDeque;
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fileio;

/// Child category -> set of parent categories. Every category in the graph
/// has an entry, even when its parent set is empty.
pub type ParentMap = BTreeMap<String, BTreeSet<String>>;

/// Acyclic category graph plus entity labels.
#[derive(Debug, Clone)]
pub struct CategoryDag {
    parents: ParentMap,
    /// entity -> direct categories; never empty per entity.
    labels: BTreeMap<String, BTreeSet<String>>,
}

/// What `load_hierarchy` changed or dropped while building the DAG.
#[derive(Debug, Clone, Default)]
pub struct RepairReport {
    /// `(child, parent)` records deleted to break cycles, in deletion order.
    pub removed_edges: Vec<(String, String)>,
    /// Prune-list ids that were actually present and removed.
    pub pruned_categories: Vec<String>,
    /// Entities dropped because no labels survived pruning.
    pub dropped_entities: usize,
}

/// One ancestor of an entity: its average downward distance to the entity's
/// direct categories (direct categories sit at 1) and its normalized weight.
#[derive(Debug, Clone, PartialEq)]
pub struct AncestorEntry {
    pub category: String,
    pub distance: f64,
    pub weight: f64,
}

/// Inverse-distance weights over the full ancestor set of one entity.
/// Entries are sorted by ascending distance, then category id; weights sum
/// to 1.
#[derive(Debug, Clone)]
pub struct AncestorWeights {
    pub entity: String,
    pub entries: Vec<AncestorEntry>,
}

impl AncestorWeights {
    pub fn weight_of(&self, category: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.category == category)
            .map(|e| e.weight)
    }
}

/// Deletes edges until the graph is acyclic and returns the deleted
/// `(child, parent)` records in deletion order.
///
/// The walk is an iterative depth-first traversal over the downward
/// orientation (parent to child), started from parentless categories first
/// and then from any still-unvisited category, both in lexicographic order;
/// children are visited in lexicographic order too. An edge that lands on a
/// category currently on the DFS stack closes a cycle and is deleted. The
/// deterministic visit order makes the deletion set reproducible.
pub fn break_cycles(parents: &mut ParentMap) -> Vec<(String, String)> {
    // Normalize: every mentioned category gets an entry.
    let mentioned: Vec<String> = parents.values().flat_map(|ps| ps.iter().cloned()).collect();
    for cat in mentioned {
        parents.entry(cat).or_default();
    }

    let mut removed: Vec<(String, String)> = Vec::new();
    {
        // Downward adjacency: parent -> sorted children.
        let mut children: BTreeMap<&str, Vec<&str>> =
            parents.keys().map(|c| (c.as_str(), Vec::new())).collect();
        for (child, ps) in parents.iter() {
            for parent in ps {
                children
                    .get_mut(parent.as_str())
                    .expect("normalized above")
                    .push(child.as_str());
            }
        }
        for list in children.values_mut() {
            list.sort_unstable();
        }

        const WHITE: u8 = 0;
        const GREY: u8 = 1;
        const BLACK: u8 = 2;
        let mut color: BTreeMap<&str, u8> = parents.keys().map(|c| (c.as_str(), WHITE)).collect();

        let mut starts: Vec<&str> = parents
            .iter()
            .filter(|(_, ps)| ps.is_empty())
            .map(|(c, _)| c.as_str())
            .collect();
        starts.extend(parents.keys().map(|c| c.as_str()));

        for start in starts {
            if color[start] != WHITE {
                continue;
            }
            // Stack of (node, next child index); iterative to survive deep
            // chains scraped from real hierarchies.
            let mut stack: Vec<(&str, usize)> = vec![(start, 0)];
            *color.get_mut(start).unwrap() = GREY;
            while let Some(&(node, next)) = stack.last() {
                let kids = &children[node];
                if next < kids.len() {
                    stack.last_mut().unwrap().1 += 1;
                    let kid = kids[next];
                    match color[kid] {
                        WHITE => {
                            *color.get_mut(kid).unwrap() = GREY;
                            stack.push((kid, 0));
                        }
                        // An edge into the active stack closes a cycle.
                        GREY => removed.push((kid.to_string(), node.to_string())),
                        _ => {}
                    }
                } else {
                    *color.get_mut(node).unwrap() = BLACK;
                    stack.pop();
                }
            }
        }
    }

    for (child, parent) in &removed {
        if let Some(ps) = parents.get_mut(child) {
            ps.remove(parent);
        }
    }
    removed
}

/// Builds a repaired [`CategoryDag`] from raw edge and label records.
///
/// Duplicate records collapse. Entities whose labels all vanish (or that
/// never had any) are dropped and counted in the report. Categories may be
/// declared by edges or by labels; label-only categories become roots.
pub fn load_hierarchy<E, L>(
    edge_records: E,
    label_records: L,
) -> Result<(CategoryDag, RepairReport)>
where
    E: IntoIterator<Item = (String, String)>,
    L: IntoIterator<Item = (String, String)>,
{
    load_hierarchy_pruned(edge_records, label_records, &BTreeSet::new())
}

/// Same as [`load_hierarchy`] with a set of category ids to prune first.
/// Pruning removes the categories, their incident edges, and any labels
/// pointing at them; it runs before cycle repair.
pub fn load_hierarchy_pruned<E, L>(
    edge_records: E,
    label_records: L,
    prune: &BTreeSet<String>,
) -> Result<(CategoryDag, RepairReport)>
where
    E: IntoIterator<Item = (String, String)>,
    L: IntoIterator<Item = (String, String)>,
{
    let mut report = RepairReport::default();

    let mut parents: ParentMap = BTreeMap::new();
    let mut pruned_seen: BTreeSet<String> = BTreeSet::new();
    for (child, parent) in edge_records {
        for end in [&child, &parent] {
            if prune.contains(end.as_str()) {
                pruned_seen.insert(end.clone());
            }
        }
        if prune.contains(&child) || prune.contains(&parent) {
            continue;
        }
        parents.entry(parent.clone()).or_default();
        parents.entry(child).or_default().insert(parent);
    }

    let mut labels: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    let mut entities_seen: BTreeSet<String> = BTreeSet::new();
    for (entity, category) in label_records {
        entities_seen.insert(entity.clone());
        if prune.contains(&category) {
            pruned_seen.insert(category);
            continue;
        }
        parents.entry(category.clone()).or_default();
        labels.entry(entity).or_default().insert(category);
    }
    report.dropped_entities = entities_seen.len() - labels.len();
    if report.dropped_entities > 0 {
        log::warn!(
            "dropped {} entities with no surviving labels",
            report.dropped_entities
        );
    }
    report.pruned_categories = pruned_seen.into_iter().collect();

    report.removed_edges = break_cycles(&mut parents);

    Ok((CategoryDag { parents, labels }, report))
}

impl CategoryDag {
    /// All category ids, sorted.
    pub fn categories(&self) -> impl Iterator<Item = &str> {
        self.parents.keys().map(|c| c.as_str())
    }

    /// All labeled entity ids, sorted.
    pub fn entities(&self) -> impl Iterator<Item = &str> {
        self.labels.keys().map(|e| e.as_str())
    }

    pub fn category_count(&self) -> usize {
        self.parents.len()
    }

    pub fn entity_count(&self) -> usize {
        self.labels.len()
    }

    pub fn contains_category(&self, category: &str) -> bool {
        self.parents.contains_key(category)
    }

    pub fn contains_entity(&self, entity: &str) -> bool {
        self.labels.contains_key(entity)
    }

    /// Direct parent categories of `category`.
    pub fn parents_of(&self, category: &str) -> Result<&BTreeSet<String>> {
        self.parents.get(category).ok_or_else(|| Error::UnknownId {
            kind: "category",
            id: category.to_string(),
        })
    }

    /// Direct categories of `entity`; non-empty by construction.
    pub fn labels_of(&self, entity: &str) -> Result<&BTreeSet<String>> {
        self.labels.get(entity).ok_or_else(|| Error::UnknownId {
            kind: "entity",
            id: entity.to_string(),
        })
    }

    /// Categories with no parents.
    pub fn roots(&self) -> impl Iterator<Item = &str> {
        self.parents
            .iter()
            .filter(|(_, ps)| ps.is_empty())
            .map(|(c, _)| c.as_str())
    }

    /// Upward closure of the entity's direct categories, direct ones
    /// included.
    pub fn ancestors(&self, entity: &str) -> Result<BTreeSet<String>> {
        let direct = self.labels_of(entity)?;
        let mut seen: BTreeSet<String> = direct.clone();
        let mut queue: VecDeque<&str> = direct.iter().map(|c| c.as_str()).collect();
        while let Some(cat) = queue.pop_front() {
            if let Some(ps) = self.parents.get(cat) {
                for p in ps {
                    if seen.insert(p.clone()) {
                        queue.push_back(p.as_str());
                    }
                }
            }
        }
        Ok(seen)
    }

    /// Inverse-distance weights over the full ancestor set.
    pub fn ancestor_weights(&self, entity: &str) -> Result<AncestorWeights> {
        self.ancestor_weights_capped(entity, None)
    }

    /// Like [`Self::ancestor_weights`], but ancestors farther than
    /// `max_depth` upward steps from the direct categories (direct = 0) are
    /// omitted before the weights are normalized. Distances of the kept
    /// entries are unchanged.
    pub fn ancestor_weights_capped(
        &self,
        entity: &str,
        max_depth: Option<usize>,
    ) -> Result<AncestorWeights> {
        let direct = self.labels_of(entity)?;
        let ancestors = self.ancestors(entity)?;

        // Downward adjacency restricted to the ancestor set.
        let mut children: BTreeMap<&str, Vec<&str>> =
            ancestors.iter().map(|a| (a.as_str(), Vec::new())).collect();
        for a in &ancestors {
            for p in &self.parents[a] {
                if let Some(kids) = children.get_mut(p.as_str()) {
                    kids.push(a.as_str());
                }
            }
        }
        let mut pending_children: BTreeMap<&str, usize> =
            children.iter().map(|(c, kids)| (*c, kids.len())).collect();

        // Path-count DP in reverse topological order (children first):
        //   count(u) = [u is direct] + sum over children count(v)
        //   length(u) = sum over children (length(v) + count(v))
        // counting every downward path from u that ends at a direct category.
        let mut count: BTreeMap<&str, f64> = BTreeMap::new();
        let mut length: BTreeMap<&str, f64> = BTreeMap::new();
        let mut queue: VecDeque<&str> = pending_children
            .iter()
            .filter(|(_, n)| **n == 0)
            .map(|(c, _)| *c)
            .collect();
        let mut processed = 0usize;
        while let Some(u) = queue.pop_front() {
            processed += 1;
            let mut cnt = if direct.contains(u) { 1.0 } else { 0.0 };
            let mut len = 0.0f64;
            for v in &children[u] {
                cnt += count[v];
                len += length[v] + count[v];
            }
            count.insert(u, cnt);
            length.insert(u, len);
            for p in &self.parents[u] {
                if let Some(n) = pending_children.get_mut(p.as_str()) {
                    *n -= 1;
                    if *n == 0 {
                        queue.push_back(p.as_str());
                    }
                }
            }
        }
        debug_assert_eq!(processed, ancestors.len(), "ancestor subgraph is acyclic");

        // Shortest upward distance in edges from the direct set; used for the
        // depth cap and as the overflow fallback.
        let mut depth: BTreeMap<&str, usize> = direct.iter().map(|c| (c.as_str(), 0)).collect();
        let mut bfs: VecDeque<&str> = direct.iter().map(|c| c.as_str()).collect();
        while let Some(u) = bfs.pop_front() {
            let d = depth[u];
            for p in &self.parents[u] {
                if ancestors.contains(p) && !depth.contains_key(p.as_str()) {
                    depth.insert(p.as_str(), d + 1);
                    bfs.push_back(p.as_str());
                }
            }
        }

        let mut entries: Vec<AncestorEntry> = Vec::with_capacity(ancestors.len());
        for a in &ancestors {
            if let Some(cap) = max_depth {
                if depth[a.as_str()] > cap {
                    continue;
                }
            }
            let distance = if direct.contains(a) {
                1.0
            } else {
                let cnt = count[a.as_str()];
                let len = length[a.as_str()];
                if cnt.is_finite() && len.is_finite() {
                    1.0 + len / cnt
                } else {
                    // Path counting saturated; fall back to the shortest
                    // downward distance so the weight stays usable.
                    log::warn!("path count overflow at category {a}; using shortest-path distance");
                    depth[a.as_str()] as f64 + 1.0
                }
            };
            entries.push(AncestorEntry {
                category: a.clone(),
                distance,
                weight: 0.0,
            });
        }
        let norm: f64 = entries.iter().map(|e| 1.0 / e.distance).sum();
        for e in &mut entries {
            e.weight = (1.0 / e.distance) / norm;
        }
        entries.sort_by(|a, b| {
            a.distance
                .total_cmp(&b.distance)
                .then_with(|| a.category.cmp(&b.category))
        });

        Ok(AncestorWeights {
            entity: entity.to_string(),
            entries,
        })
    }

    /// Serializes the DAG to the artifact format: `C`/`E`/`L` records for
    /// categories, edges, and labels, all tab-separated and sorted.
    pub fn write_artifact(&self, mut w: impl Write) -> std::io::Result<()> {
        for cat in self.parents.keys() {
            writeln!(w, "C\t{cat}")?;
        }
        for (child, ps) in &self.parents {
            for parent in ps {
                writeln!(w, "E\t{child}\t{parent}")?;
            }
        }
        for (entity, cats) in &self.labels {
            for cat in cats {
                writeln!(w, "L\t{entity}\t{cat}")?;
            }
        }
        Ok(())
    }

    pub fn save_artifact(&self, path: &Path) -> Result<()> {
        let mut w = fileio::create(path)?;
        self.write_artifact(&mut w)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        fileio::finish(w, path)
    }

    /// Reads an artifact produced by [`Self::write_artifact`]. The graph is
    /// revalidated: a cyclic artifact is a structure error.
    pub fn load_artifact(path: &Path) -> Result<Self> {
        let name = path.display().to_string();
        let mut parents: ParentMap = BTreeMap::new();
        let mut labels: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
        for (line_no, line) in fileio::data_lines(path)? {
            let fields: Vec<&str> = line.split('\t').collect();
            match fields.as_slice() {
                ["C", cat] if !cat.is_empty() => {
                    parents.entry(cat.to_string()).or_default();
                }
                ["E", child, parent] if !child.is_empty() && !parent.is_empty() => {
                    parents.entry(parent.to_string()).or_default();
                    parents
                        .entry(child.to_string())
                        .or_default()
                        .insert(parent.to_string());
                }
                ["L", entity, cat] if !entity.is_empty() && !cat.is_empty() => {
                    parents.entry(cat.to_string()).or_default();
                    labels
                        .entry(entity.to_string())
                        .or_default()
                        .insert(cat.to_string());
                }
                _ => {
                    return Err(Error::parse(
                        &name,
                        line_no,
                        format!("expected C/E/L record, got: {line}"),
                    ))
                }
            }
        }
        let dag = CategoryDag { parents, labels };
        dag.check_acyclic()?;
        Ok(dag)
    }

    fn check_acyclic(&self) -> Result<()> {
        // Kahn peel over the upward orientation.
        let mut out: BTreeMap<&str, usize> = self
            .parents
            .iter()
            .map(|(c, ps)| (c.as_str(), ps.len()))
            .collect();
        let mut children: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for (child, ps) in &self.parents {
            for p in ps {
                children.entry(p.as_str()).or_default().push(child.as_str());
            }
        }
        let mut queue: VecDeque<&str> = out
            .iter()
            .filter(|(_, n)| **n == 0)
            .map(|(c, _)| *c)
            .collect();
        let mut seen = 0usize;
        while let Some(u) = queue.pop_front() {
            seen += 1;
            for v in children.get(u).into_iter().flatten() {
                let n = out.get_mut(v).unwrap();
                *n -= 1;
                if *n == 0 {
                    queue.push_back(v);
                }
            }
        }
        if seen == self.parents.len() {
            Ok(())
        } else {
            Err(Error::Structure(
                "category graph contains a cycle".to_string(),
            ))
        }
    }
}

/// Reads `child<TAB>parent` records.
pub fn read_edge_file(path: &Path) -> Result<Vec<(String, String)>> {
    let name = path.display().to_string();
    let mut edges = Vec::new();
    for (line_no, line) in fileio::data_lines(path)? {
        match line.split('\t').collect::<Vec<_>>().as_slice() {
            [child, parent] if !child.is_empty() && !parent.is_empty() => {
                edges.push((child.to_string(), parent.to_string()));
            }
            _ => {
                return Err(Error::parse(
                    &name,
                    line_no,
                    "expected child<TAB>parent".to_string(),
                ))
            }
        }
    }
    Ok(edges)
}

/// Reads `entity<TAB>category` records.
pub fn read_label_file(path: &Path) -> Result<Vec<(String, String)>> {
    let name = path.display().to_string();
    let mut labels = Vec::new();
    for (line_no, line) in fileio::data_lines(path)? {
        match line.split('\t').collect::<Vec<_>>().as_slice() {
            [entity, category] if !entity.is_empty() && !category.is_empty() => {
                labels.push((entity.to_string(), category.to_string()));
            }
            _ => {
                return Err(Error::parse(
                    &name,
                    line_no,
                    "expected entity<TAB>category".to_string(),
                ))
            }
        }
    }
    Ok(labels)
}

/// Reads a prune list: one category id per line.
pub fn read_prune_file(path: &Path) -> Result<BTreeSet<String>> {
    let name = path.display().to_string();
    let mut prune = BTreeSet::new();
    for (line_no, line) in fileio::data_lines(path)? {
        let id = line.trim();
        if id.contains('\t') {
            return Err(Error::parse(
                &name,
                line_no,
                "expected one category id per line".to_string(),
            ));
        }
        prune.insert(id.to_string());
    }
    Ok(prune)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edges(list: &[(&str, &str)]) -> Vec<(String, String)> {
        list.iter()
            .map(|(c, p)| (c.to_string(), p.to_string()))
            .collect()
    }

    fn build(
        edge_list: &[(&str, &str)],
        label_list: &[(&str, &str)],
    ) -> (CategoryDag, RepairReport) {
        load_hierarchy(edges(edge_list), edges(label_list)).unwrap()
    }

    #[test]
    fn two_cycle_loses_exactly_one_edge() {
        let (dag, report) = build(&[("b", "a"), ("a", "b")], &[("e1", "b")]);
        assert_eq!(
            report.removed_edges,
            vec![("a".to_string(), "b".to_string())]
        );
        assert!(dag.check_acyclic().is_ok());
        assert_eq!(dag.parents_of("b").unwrap().len(), 1);
        assert!(dag.parents_of("a").unwrap().is_empty());
    }

    #[test]
    fn self_loop_removed() {
        let (dag, report) = build(&[("a", "a")], &[("e1", "a")]);
        assert_eq!(
            report.removed_edges,
            vec![("a".to_string(), "a".to_string())]
        );
        assert!(dag.parents_of("a").unwrap().is_empty());
    }

    #[test]
    fn label_only_category_becomes_root() {
        let (dag, _) = build(&[], &[("e1", "a")]);
        assert_eq!(dag.roots().collect::<Vec<_>>(), vec!["a"]);
        assert_eq!(dag.category_count(), 1);
        assert_eq!(dag.labels_of("e1").unwrap().len(), 1);
    }

    #[test]
    fn duplicate_records_collapse() {
        let (dag, report) = build(&[("a", "b"), ("a", "b")], &[("e1", "a"), ("e1", "a")]);
        assert!(report.removed_edges.is_empty());
        assert_eq!(dag.parents_of("a").unwrap().len(), 1);
        assert_eq!(dag.labels_of("e1").unwrap().len(), 1);
    }

    #[test]
    fn entity_without_labels_is_dropped() {
        let prune: BTreeSet<String> = ["junk".to_string()].into();
        let (dag, report) = load_hierarchy_pruned(
            edges(&[("a", "junk")]),
            edges(&[("e1", "a"), ("e2", "junk")]),
            &prune,
        )
        .unwrap();
        assert_eq!(report.dropped_entities, 1);
        assert_eq!(report.pruned_categories, vec!["junk".to_string()]);
        assert!(!dag.contains_entity("e2"));
        assert!(!dag.contains_category("junk"));
        assert!(dag.parents_of("a").unwrap().is_empty());
    }

    #[test]
    fn ancestors_follow_parent_chain() {
        let (dag, _) = build(&[("a", "b"), ("b", "c")], &[("e1", "a")]);
        let anc = dag.ancestors("e1").unwrap();
        assert_eq!(
            anc.iter().map(|s| s.as_str()).collect::<Vec<_>>(),
            vec!["a", "b", "c"]
        );
    }

    #[test]
    fn chain_weights_are_two_thirds_one_third() {
        let (dag, _) = build(&[("c1", "c2")], &[("e1", "c1")]);
        let w = dag.ancestor_weights("e1").unwrap();
        assert_eq!(w.entries.len(), 2);
        assert_eq!(w.entries[0].category, "c1");
        assert_eq!(w.entries[0].distance, 1.0);
        assert_eq!(w.entries[0].weight, 2.0 / 3.0);
        assert_eq!(w.entries[1].category, "c2");
        assert_eq!(w.entries[1].distance, 2.0);
        assert_eq!(w.entries[1].weight, 1.0 / 3.0);
    }

    #[test]
    fn shared_parent_weights_split_two_two_one() {
        let (dag, _) = build(&[("a", "r"), ("b", "r")], &[("e1", "a"), ("e1", "b")]);
        let w = dag.ancestor_weights("e1").unwrap();
        assert_eq!(w.weight_of("a").unwrap(), 0.4);
        assert_eq!(w.weight_of("b").unwrap(), 0.4);
        assert_eq!(w.weight_of("r").unwrap(), 0.2);
        assert_eq!(w.entries[2].distance, 2.0);
    }

    #[test]
    fn multi_path_distance_averages_all_paths() {
        // d is reachable from the label c1 both directly and through mid:
        //   c1 -> d, c1 -> mid -> d. Paths from d down to c1: 1 and 2 edges.
        let (dag, _) = build(&[("c1", "d"), ("c1", "mid"), ("mid", "d")], &[("e1", "c1")]);
        let w = dag.ancestor_weights("e1").unwrap();
        let d = w.entries.iter().find(|e| e.category == "d").unwrap();
        assert_eq!(d.distance, 1.0 + (1.0 + 2.0) / 2.0);
    }

    #[test]
    fn weights_sum_to_one() {
        let (dag, _) = build(
            &[("a", "b"), ("a", "c"), ("b", "d"), ("c", "d"), ("d", "e")],
            &[("e1", "a")],
        );
        let w = dag.ancestor_weights("e1").unwrap();
        let total: f64 = w.entries.iter().map(|e| e.weight).sum();
        assert!((total - 1.0).abs() < 1e-9);
        // Farther ancestors never outweigh nearer ones in the sorted order.
        for pair in w.entries.windows(2) {
            assert!(pair[0].weight >= pair[1].weight);
        }
    }

    #[test]
    fn depth_cap_drops_far_ancestors_and_renormalizes() {
        let (dag, _) = build(&[("c1", "c2"), ("c2", "c3")], &[("e1", "c1")]);
        let w = dag.ancestor_weights_capped("e1", Some(1)).unwrap();
        assert_eq!(w.entries.len(), 2);
        assert!(w.weight_of("c3").is_none());
        let total: f64 = w.entries.iter().map(|e| e.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
        // Distances keep their uncapped values.
        assert_eq!(w.entries[1].distance, 2.0);
    }

    #[test]
    fn unknown_entity_is_reported() {
        let (dag, _) = build(&[("a", "b")], &[("e1", "a")]);
        assert!(matches!(
            dag.ancestor_weights("nope"),
            Err(Error::UnknownId { kind: "entity", .. })
        ));
    }

    #[test]
    fn artifact_round_trips() {
        let (dag, _) = build(
            &[("a", "b"), ("b", "c"), ("x", "c")],
            &[("e1", "a"), ("e2", "x")],
        );
        let mut buf = Vec::new();
        dag.write_artifact(&mut buf).unwrap();
        let dir = std::env::temp_dir().join("catvec-hierarchy-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.dag");
        std::fs::write(&path, &buf).unwrap();
        let loaded = CategoryDag::load_artifact(&path).unwrap();
        let mut buf2 = Vec::new();
        loaded.write_artifact(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn cyclic_artifact_is_rejected() {
        let dir = std::env::temp_dir().join("catvec-hierarchy-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("cyclic.dag");
        std::fs::write(&path, "E\ta\tb\nE\tb\ta\n").unwrap();
        assert!(matches!(
            CategoryDag::load_artifact(&path),
            Err(Error::Structure(_))
        ));
    }
}
