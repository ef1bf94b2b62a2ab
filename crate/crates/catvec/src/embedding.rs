//! Embedding storage and the text interchange format.
//!
//! A store holds three dense matrices: entity input vectors, entity output
//! vectors (the skip-gram context side), and category input vectors. The
//! text format is `count dim` on the first line followed by one row per
//! vector, labels prefixed `e:` or `c:`. Values are written with 9
//! significant digits; export -> import -> export is byte-identical.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fileio;

/// Dense row-major f64 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.data.len().checked_div(self.cols).unwrap_or(0)
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub(crate) fn as_mut_ptr(&mut self) -> *mut f64 {
        self.data.as_mut_ptr()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }
}

/// Which vector families to export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportSet {
    Entities,
    Categories,
    Both,
}

impl std::str::FromStr for ExportSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entities" => Ok(ExportSet::Entities),
            "categories" => Ok(ExportSet::Categories),
            "both" => Ok(ExportSet::Both),
            other => Err(Error::Config(format!(
                "unknown export set {other:?}; use entities, categories, or both"
            ))),
        }
    }
}

/// Entity and category vectors plus the label registries that map ids to
/// rows. Entity rows follow the vocabulary order handed to [`init_model`];
/// category rows are sorted by id.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dim: usize,
    entities: Vec<String>,
    entity_index: HashMap<String, u32>,
    categories: Vec<String>,
    category_index: HashMap<String, u32>,
    entity_in: Matrix,
    entity_out: Matrix,
    category_in: Matrix,
}

/// Seeded initialization: input vectors uniform in (-0.5/dim, +0.5/dim),
/// output vectors zero. The same seed always produces bit-identical
/// matrices.
pub fn init_model(
    entities: Vec<String>,
    mut categories: Vec<String>,
    dim: usize,
    seed: u64,
) -> Result<EmbeddingStore> {
    if dim == 0 {
        return Err(Error::Config("embedding dimension must be positive".into()));
    }
    if entities.is_empty() {
        return Err(Error::Config("model needs at least one entity".into()));
    }
    if categories.is_empty() {
        return Err(Error::Config("model needs at least one category".into()));
    }
    categories.sort();
    categories.dedup();

    let entity_index = index_of(&entities, "entity")?;
    let category_index = index_of(&categories, "category")?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = 0.5 / dim as f64;
    let uniform = Uniform::new(-half, half);

    let mut entity_in = Matrix::zeros(entities.len(), dim);
    for v in entity_in.data.iter_mut() {
        *v = uniform.sample(&mut rng);
    }
    let mut category_in = Matrix::zeros(categories.len(), dim);
    for v in category_in.data.iter_mut() {
        *v = uniform.sample(&mut rng);
    }
    let entity_out = Matrix::zeros(entities.len(), dim);

    Ok(EmbeddingStore {
        dim,
        entities,
        entity_index,
        categories,
        category_index,
        entity_in,
        entity_out,
        category_in,
    })
}

fn index_of(ids: &[String], kind: &str) -> Result<HashMap<String, u32>> {
    let mut map = HashMap::with_capacity(ids.len());
    for (i, id) in ids.iter().enumerate() {
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(Error::Invalid(format!("bad {kind} id: {id:?}")));
        }
        if map.insert(id.clone(), i as u32).is_some() {
            return Err(Error::Invalid(format!("duplicate {kind} id: {id}")));
        }
    }
    Ok(map)
}

impl EmbeddingStore {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entity_count(&self) -> usize {
        self.entities.len()
    }

    pub fn category_count(&self) -> usize {
        self.categories.len()
    }

    pub fn entities(&self) -> impl Iterator<Item = &str> {
        self.entities.iter().map(|s| s.as_str())
    }

    pub fn categories(&self) -> impl Iterator<Item = &str> {
        self.categories.iter().map(|s| s.as_str())
    }

    pub fn entity_index(&self, id: &str) -> Option<u32> {
        self.entity_index.get(id).copied()
    }

    pub fn category_index(&self, id: &str) -> Option<u32> {
        self.category_index.get(id).copied()
    }

    pub fn entity_id(&self, row: u32) -> &str {
        &self.entities[row as usize]
    }

    pub fn category_id(&self, row: u32) -> &str {
        &self.categories[row as usize]
    }

    pub fn entity_vector(&self, row: u32) -> &[f64] {
        self.entity_in.row(row as usize)
    }

    pub fn entity_vector_mut(&mut self, row: u32) -> &mut [f64] {
        self.entity_in.row_mut(row as usize)
    }

    pub fn entity_output_vector(&self, row: u32) -> &[f64] {
        self.entity_out.row(row as usize)
    }

    pub fn entity_output_vector_mut(&mut self, row: u32) -> &mut [f64] {
        self.entity_out.row_mut(row as usize)
    }

    pub fn category_vector(&self, row: u32) -> &[f64] {
        self.category_in.row(row as usize)
    }

    pub fn category_vector_mut(&mut self, row: u32) -> &mut [f64] {
        self.category_in.row_mut(row as usize)
    }

    /// Entity input vector by id.
    pub fn entity_vector_by_id(&self, id: &str) -> Option<&[f64]> {
        self.entity_index(id).map(|r| self.entity_vector(r))
    }

    /// Category input vector by id.
    pub fn category_vector_by_id(&self, id: &str) -> Option<&[f64]> {
        self.category_index(id).map(|r| self.category_vector(r))
    }

    pub(crate) fn matrices_mut(&mut self) -> (&mut Matrix, &mut Matrix, &mut Matrix) {
        (
            &mut self.entity_in,
            &mut self.entity_out,
            &mut self.category_in,
        )
    }

    /// Softmax probability of observing `context` given `target`, over the
    /// whole entity vocabulary (output vectors), computed with
    /// max-subtraction. Diagnostic; training never materializes this.
    pub fn softmax_prob(&self, target: &str, context: &str) -> Result<f64> {
        let t = self.entity_index(target).ok_or_else(|| Error::UnknownId {
            kind: "entity",
            id: target.to_string(),
        })?;
        let c = self.entity_index(context).ok_or_else(|| Error::UnknownId {
            kind: "entity",
            id: context.to_string(),
        })?;
        let tv = self.entity_vector(t);
        let logits: Vec<f64> = (0..self.entity_count() as u32)
            .map(|e| dot(tv, self.entity_output_vector(e)))
            .collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let denom: f64 = logits.iter().map(|&l| (l - max).exp()).sum();
        Ok((logits[c as usize] - max).exp() / denom)
    }

    /// Writes the selected vector families to `path` in the text format.
    pub fn export(&self, path: &Path, set: ExportSet) -> Result<()> {
        let mut w = fileio::create(path)?;
        self.write(&mut w, set)
            .map_err(|e| Error::io(path.display().to_string(), e))?;
        fileio::finish(w, path)
    }

    pub fn write(&self, w: &mut impl Write, set: ExportSet) -> std::io::Result<()> {
        let entities = matches!(set, ExportSet::Entities | ExportSet::Both);
        let categories = matches!(set, ExportSet::Categories | ExportSet::Both);
        let count = if entities { self.entities.len() } else { 0 }
            + if categories { self.categories.len() } else { 0 };
        writeln!(w, "{count} {dim}", dim = self.dim)?;
        if entities {
            for (i, id) in self.entities.iter().enumerate() {
                write_row(w, "e:", id, self.entity_in.row(i))?;
            }
        }
        if categories {
            for (i, id) in self.categories.iter().enumerate() {
                write_row(w, "c:", id, self.category_in.row(i))?;
            }
        }
        Ok(())
    }

    /// Reads an embedding file. Output vectors are not part of the format
    /// and come back zeroed; such a store supports evaluation and re-export
    /// but is not a training checkpoint by itself.
    pub fn import(path: &Path) -> Result<EmbeddingStore> {
        let name = path.display().to_string();
        let lines = fileio::data_lines(path)?;
        let mut it = lines.into_iter();
        let Some((line_no, header)) = it.next() else {
            return Err(Error::parse(&name, 1, "missing header".to_string()));
        };
        let (count, dim) = parse_header(&header)
            .ok_or_else(|| Error::parse(&name, line_no, format!("bad header: {header}")))?;

        let mut entities = Vec::new();
        let mut entity_rows: Vec<f64> = Vec::new();
        let mut categories = Vec::new();
        let mut category_rows: Vec<f64> = Vec::new();
        let mut seen = 0usize;
        for (line_no, line) in it {
            let mut fields = line.split(' ');
            let label = fields.next().unwrap_or("");
            let values: std::result::Result<Vec<f64>, _> =
                fields.map(|f| f.parse::<f64>()).collect();
            let values =
                values.map_err(|e| Error::parse(&name, line_no, format!("bad value: {e}")))?;
            if values.len() != dim {
                return Err(Error::parse(
                    &name,
                    line_no,
                    format!("expected {dim} values, got {}", values.len()),
                ));
            }
            if let Some(id) = label.strip_prefix("e:") {
                entities.push(id.to_string());
                entity_rows.extend_from_slice(&values);
            } else if let Some(id) = label.strip_prefix("c:") {
                categories.push(id.to_string());
                category_rows.extend_from_slice(&values);
            } else {
                return Err(Error::parse(
                    &name,
                    line_no,
                    format!("label must start with e: or c:, got {label:?}"),
                ));
            }
            seen += 1;
        }
        if seen != count {
            return Err(Error::parse(
                &name,
                0,
                format!("header declared {count} rows, found {seen}"),
            ));
        }

        let entity_index = index_of(&entities, "entity")?;
        let category_index = index_of(&categories, "category")?;
        let entity_out = Matrix::zeros(entities.len(), dim);
        Ok(EmbeddingStore {
            dim,
            entity_in: Matrix {
                cols: dim,
                data: entity_rows,
            },
            category_in: Matrix {
                cols: dim,
                data: category_rows,
            },
            entity_out,
            entities,
            entity_index,
            categories,
            category_index,
        })
    }
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut parts = line.split(' ');
    let count = parts.next()?.parse().ok()?;
    let dim = parts.next()?.parse().ok()?;
    if parts.next().is_some() || dim == 0 {
        return None;
    }
    Some((count, dim))
}

fn write_row(w: &mut impl Write, prefix: &str, id: &str, row: &[f64]) -> std::io::Result<()> {
    write!(w, "{prefix}{id}")?;
    for v in row {
        write!(w, " {v:.8e}")?;
    }
    writeln!(w)
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Writes a checkpoint: the embedding file (both families) plus a `.meta`
/// sidecar of `key=value` lines describing how the run got there.
pub fn write_checkpoint(
    store: &EmbeddingStore,
    path: &Path,
    meta: &[(String, String)],
) -> Result<()> {
    store.export(path, ExportSet::Both)?;
    let meta_path = sidecar_path(path);
    let mut w = fileio::create(&meta_path)?;
    for (k, v) in meta {
        writeln!(w, "{k}={v}").map_err(|e| Error::io(meta_path.display().to_string(), e))?;
    }
    fileio::finish(w, &meta_path)
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".meta");
    std::path::PathBuf::from(s)
}
