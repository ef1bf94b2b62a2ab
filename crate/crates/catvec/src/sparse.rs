//! Sparse bag-of-entities vectors and their cosine similarity.
//!
//! A document or label description is a capped list of (entity, weight)
//! entries: weights nonnegative, entities unique, sorted by weight descending
//! (ties by entity id). The text form is `entity:weight` tokens separated by
//! spaces.

use std::collections::BTreeMap;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fileio;

/// Default cap on entries per vector.
pub const DEFAULT_ESA_SIZE: usize = 500;

/// Sparse entity vector: deduplicated, nonnegative, at most `max_len`
/// entries, ordered by weight descending.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EsaVector {
    entries: Vec<(String, f64)>,
}

impl EsaVector {
    /// Builds a vector from raw (entity, weight) pairs: duplicates are summed,
    /// entries are sorted by weight descending (entity id ascending on ties),
    /// and only the heaviest `max_len` survive.
    pub fn new(raw: Vec<(String, f64)>, max_len: usize) -> Result<Self> {
        let mut summed: BTreeMap<String, f64> = BTreeMap::new();
        for (entity, weight) in raw {
            if entity.is_empty() || entity.chars().any(char::is_whitespace) {
                return Err(Error::Invalid(format!("bad entity id: {entity:?}")));
            }
            if !weight.is_finite() || weight < 0.0 {
                return Err(Error::Invalid(format!(
                    "entity {entity} has weight {weight}; weights must be finite and nonnegative"
                )));
            }
            *summed.entry(entity).or_insert(0.0) += weight;
        }
        let mut entries: Vec<(String, f64)> = summed.into_iter().collect();
        entries.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        entries.truncate(max_len);
        Ok(EsaVector { entries })
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn weight_of(&self, entity: &str) -> Option<f64> {
        self.entries
            .iter()
            .find(|(e, _)| e == entity)
            .map(|(_, w)| *w)
    }

    /// Parses the inline form `entity:weight entity:weight ...`. An empty
    /// string (or `-`) is the empty vector.
    pub fn parse_inline(s: &str, max_len: usize) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "-" {
            return Ok(EsaVector::default());
        }
        let mut raw = Vec::new();
        for token in s.split(' ').filter(|t| !t.is_empty()) {
            let Some((entity, weight)) = token.rsplit_once(':') else {
                return Err(Error::Invalid(format!(
                    "bad sparse entry {token:?}; expected entity:weight"
                )));
            };
            let weight: f64 = weight
                .parse()
                .map_err(|e| Error::Invalid(format!("bad weight in {token:?}: {e}")))?;
            raw.push((entity.to_string(), weight));
        }
        EsaVector::new(raw, max_len)
    }

    /// Inline form; the inverse of [`Self::parse_inline`] up to weight
    /// formatting. Empty vectors render as `-`.
    pub fn to_inline(&self) -> String {
        if self.entries.is_empty() {
            return "-".to_string();
        }
        let mut out = String::new();
        for (i, (entity, weight)) in self.entries.iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{entity}:{weight}");
        }
        out
    }
}

/// Cosine similarity over the sparse intersection. Both vectors need at
/// least one positive weight; disjoint supports give 0. Always in [0, 1]
/// because weights are nonnegative.
pub fn cosine_sparse(u: &EsaVector, v: &EsaVector) -> Result<f64> {
    // norm^2 terms accumulate in entry order, and the dot accumulates in u's
    // entry order, so identical vectors produce bitwise-identical numerator
    // and norm and the ratio is exactly 1.
    let nu: f64 = u.entries.iter().map(|(_, w)| w * w).sum();
    let nv: f64 = v.entries.iter().map(|(_, w)| w * w).sum();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::Invalid(
            "cosine of a zero sparse vector is undefined".into(),
        ));
    }
    let weights_v: HashMap<&str, f64> = v.entries.iter().map(|(e, w)| (e.as_str(), *w)).collect();
    let mut dot = 0.0;
    for (e, w) in &u.entries {
        if let Some(wv) = weights_v.get(e.as_str()) {
            dot += w * wv;
        }
    }
    Ok(dot / (nu * nv).sqrt())
}

/// Reads a document file: `doc_id<TAB>entity:weight entity:weight ...` per
/// line. Duplicate document ids are rejected.
pub fn read_documents_file(path: &Path, max_len: usize) -> Result<BTreeMap<String, EsaVector>> {
    let name = path.display().to_string();
    let mut docs = BTreeMap::new();
    for (line_no, line) in fileio::data_lines(path)? {
        let Some((doc_id, rest)) = line.split_once('\t') else {
            return Err(Error::parse(
                &name,
                line_no,
                "expected doc_id<TAB>sparse vector".to_string(),
            ));
        };
        if doc_id.is_empty() || doc_id.chars().any(char::is_whitespace) {
            return Err(Error::parse(
                &name,
                line_no,
                format!("bad doc id {doc_id:?}"),
            ));
        }
        let vector = EsaVector::parse_inline(rest, max_len)
            .map_err(|e| Error::parse(&name, line_no, e.to_string()))?;
        if docs.insert(doc_id.to_string(), vector).is_some() {
            return Err(Error::parse(
                &name,
                line_no,
                format!("duplicate document id {doc_id}"),
            ));
        }
    }
    Ok(docs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(entries: &[(&str, f64)]) -> EsaVector {
        EsaVector::new(
            entries.iter().map(|(e, w)| (e.to_string(), *w)).collect(),
            DEFAULT_ESA_SIZE,
        )
        .unwrap()
    }

    #[test]
    fn entries_dedup_sort_and_truncate() {
        let vec = EsaVector::new(
            vec![
                ("b".to_string(), 1.0),
                ("a".to_string(), 2.0),
                ("b".to_string(), 3.0),
                ("c".to_string(), 4.0),
            ],
            2,
        )
        .unwrap();
        // b sums to 4.0, ties with c, ties break by id; a (2.0) is cut.
        assert_eq!(
            vec.entries(),
            &[("b".to_string(), 4.0), ("c".to_string(), 4.0)]
        );
    }

    #[test]
    fn negative_and_non_finite_weights_are_rejected() {
        assert!(matches!(
            EsaVector::new(vec![("a".to_string(), -0.1)], 10),
            Err(Error::Invalid(_))
        ));
        assert!(matches!(
            EsaVector::new(vec![("a".to_string(), f64::NAN)], 10),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn inline_round_trip() {
        let vec = v(&[("alpha", 0.5), ("beta", 2.0)]);
        let inline = vec.to_inline();
        assert_eq!(inline, "beta:2 alpha:0.5");
        let back = EsaVector::parse_inline(&inline, DEFAULT_ESA_SIZE).unwrap();
        assert_eq!(back, vec);
        assert_eq!(EsaVector::parse_inline("-", 10).unwrap().len(), 0);
        assert!(EsaVector::parse_inline("noweight", 10).is_err());
        assert!(EsaVector::parse_inline("a:xyz", 10).is_err());
    }

    #[test]
    fn cosine_of_identical_vectors_is_exactly_one() {
        let a = v(&[("x", 2.0), ("y", 3.0), ("z", 0.7)]);
        assert_eq!(cosine_sparse(&a, &a).unwrap(), 1.0);
    }

    #[test]
    fn cosine_of_disjoint_supports_is_zero() {
        let a = v(&[("x", 1.0), ("y", 1.0)]);
        let b = v(&[("p", 2.0), ("q", 0.3)]);
        assert_eq!(cosine_sparse(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn cosine_half_overlap_is_exactly_half() {
        let a = v(&[("a", 1.0), ("b", 1.0)]);
        let b = v(&[("a", 1.0), ("c", 1.0)]);
        // 1 / sqrt(2 * 2) = 0.5 exactly.
        assert_eq!(cosine_sparse(&a, &b).unwrap(), 0.5);
    }

    #[test]
    fn cosine_rejects_zero_vectors() {
        let a = v(&[("x", 1.0)]);
        let zero = v(&[("x", 0.0)]);
        assert!(matches!(cosine_sparse(&a, &zero), Err(Error::Invalid(_))));
        assert!(matches!(
            cosine_sparse(&EsaVector::default(), &a),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn cosine_stays_in_unit_interval() {
        let a = v(&[("a", 0.3), ("b", 9.0), ("c", 0.11)]);
        let b = v(&[("b", 0.25), ("c", 4.0), ("d", 1.0)]);
        let s = cosine_sparse(&a, &b).unwrap();
        assert!((0.0..=1.0).contains(&s));
    }

    #[test]
    fn document_file_reads_and_rejects_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("docs.tsv");
        std::fs::write(&path, "# docs\nd1\ta:1 b:0.5\nd2\tc:2\n").unwrap();
        let docs = read_documents_file(&path, 500).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs["d1"].len(), 2);
        assert_eq!(docs["d1"].weight_of("a"), Some(1.0));

        std::fs::write(&path, "d1\ta:1\nd1\tb:1\n").unwrap();
        match read_documents_file(&path, 500) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
