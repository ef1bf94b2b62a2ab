//! Training corpus: co-occurrence records, the entity vocabulary, and the
//! smoothed-frequency negative sampler.
//!
//! A corpus record is one target entity plus the context entities observed
//! with it; loading flattens records into (target, context) pairs and tallies
//! context occurrences per entity. Vocabulary indices are assigned in first-
//! seen order, so the same input file always produces the same layout.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::fileio;

/// One skip-gram training pair, as vocabulary indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrainingPair {
    pub target: u32,
    pub context: u32,
}

/// Entity vocabulary: id <-> index plus context-occurrence counts.
#[derive(Debug, Clone, Default)]
pub struct Vocab {
    ids: Vec<String>,
    index: HashMap<String, u32>,
    context_counts: Vec<u64>,
}

impl Vocab {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn index_of(&self, id: &str) -> Option<u32> {
        self.index.get(id).copied()
    }

    pub fn id(&self, index: u32) -> &str {
        &self.ids[index as usize]
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.ids.iter().map(|s| s.as_str())
    }

    /// Context-occurrence count, floored at 1 so every vocabulary member
    /// keeps a positive sampling weight even when it only ever appears as a
    /// target.
    pub fn frequency(&self, index: u32) -> u64 {
        self.context_counts[index as usize].max(1)
    }

    pub fn frequencies(&self) -> Vec<u64> {
        (0..self.len() as u32).map(|i| self.frequency(i)).collect()
    }

    fn intern(&mut self, id: &str) -> u32 {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.ids.len() as u32;
        self.ids.push(id.to_string());
        self.index.insert(id.to_string(), i);
        self.context_counts.push(0);
        i
    }
}

/// Pairs plus vocabulary, ready for training. Pairs keep record order, so an
/// epoch can replay them any number of times.
#[derive(Debug, Clone)]
pub struct TrainingCorpus {
    vocab: Vocab,
    pairs: Vec<TrainingPair>,
}

/// Counts of records the loader had to skip.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CorpusReport {
    pub skipped_empty_records: usize,
}

impl TrainingCorpus {
    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn pairs(&self) -> &[TrainingPair] {
        &self.pairs
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    /// Loads records of the form (target, contexts). Records with an empty
    /// context list are skipped and counted.
    pub fn from_records<I, C>(records: I) -> (Self, CorpusReport)
    where
        I: IntoIterator<Item = (String, C)>,
        C: IntoIterator<Item = String>,
    {
        let mut vocab = Vocab::default();
        let mut pairs = Vec::new();
        let mut report = CorpusReport::default();
        for (target, contexts) in records {
            let target_idx = vocab.intern(&target);
            let mut any = false;
            for ctx in contexts {
                let ctx_idx = vocab.intern(&ctx);
                vocab.context_counts[ctx_idx as usize] += 1;
                pairs.push(TrainingPair {
                    target: target_idx,
                    context: ctx_idx,
                });
                any = true;
            }
            if !any {
                report.skipped_empty_records += 1;
            }
        }
        if report.skipped_empty_records > 0 {
            log::warn!(
                "skipped {} corpus records with no context entities",
                report.skipped_empty_records
            );
        }
        (TrainingCorpus { vocab, pairs }, report)
    }

    /// Reads a corpus file: `target<TAB>ctx1 ctx2 ...` per line.
    pub fn load_file(path: &Path) -> Result<(Self, CorpusReport)> {
        let records = read_corpus_file(path)?;
        Ok(Self::from_records(records))
    }

    /// Writes the vocabulary dump: `entity<TAB>frequency`, most frequent
    /// first, ties broken by id.
    pub fn save_vocab(&self, path: &Path) -> Result<()> {
        let mut rows: Vec<(&str, u64)> = (0..self.vocab.len() as u32)
            .map(|i| (self.vocab.id(i), self.vocab.frequency(i)))
            .collect();
        rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let mut w = fileio::create(path)?;
        for (id, freq) in rows {
            writeln!(w, "{id}\t{freq}").map_err(|e| Error::io(path.display().to_string(), e))?;
        }
        fileio::finish(w, path)
    }
}

/// Parses corpus records without building pairs. Context entities are
/// space-separated; a record may legitimately have an empty context list
/// (the loader skips it with a warning).
pub fn read_corpus_file(path: &Path) -> Result<Vec<(String, Vec<String>)>> {
    let name = path.display().to_string();
    let mut records = Vec::new();
    for (line_no, line) in fileio::data_lines(path)? {
        let Some((target, rest)) = line.split_once('\t') else {
            return Err(Error::parse(
                &name,
                line_no,
                "expected target<TAB>context entities".to_string(),
            ));
        };
        if target.is_empty() || target.chars().any(char::is_whitespace) {
            return Err(Error::parse(
                &name,
                line_no,
                format!("bad target id: {target:?}"),
            ));
        }
        if rest.contains('\t') {
            return Err(Error::parse(
                &name,
                line_no,
                "context entities must be space-separated".to_string(),
            ));
        }
        let contexts: Vec<String> = rest
            .split(' ')
            .filter(|c| !c.is_empty())
            .map(|c| c.to_string())
            .collect();
        records.push((target.to_string(), contexts));
    }
    Ok(records)
}

/// Draws negative entities from the smoothed unigram distribution
/// `p(e) proportional to frequency(e)^exponent`.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    cumulative: Vec<f64>,
    per_pair: usize,
}

/// How many redraws a single negative slot gets before the excluded id is
/// accepted anyway (relevant only for tiny vocabularies).
const MAX_REDRAWS: usize = 16;

impl NegativeSampler {
    /// Builds the cumulative table. `per_pair` is how many negatives
    /// [`Self::draw_negatives`] returns per call.
    pub fn from_frequencies(frequencies: &[u64], exponent: f64, per_pair: usize) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(Error::Config("negative sampler needs a vocabulary".into()));
        }
        if frequencies.contains(&0) {
            return Err(Error::Config(
                "negative sampler frequencies must be positive".into(),
            ));
        }
        if !exponent.is_finite() || exponent < 0.0 {
            return Err(Error::Config(format!(
                "smoothing exponent must be finite and nonnegative, got {exponent}"
            )));
        }
        let weights: Vec<f64> = frequencies
            .iter()
            .map(|&f| (f as f64).powf(exponent))
            .collect();
        let total: f64 = weights.iter().sum();
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w / total;
            cumulative.push(acc);
        }
        // Pin the top end so rounding can never strand a draw past the table.
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(NegativeSampler {
            cumulative,
            per_pair,
        })
    }

    pub fn vocab_len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn per_pair(&self) -> usize {
        self.per_pair
    }

    /// Probability assigned to one entity; probe for tests and diagnostics.
    pub fn probability(&self, index: u32) -> f64 {
        let i = index as usize;
        if i == 0 {
            self.cumulative[0]
        } else {
            self.cumulative[i] - self.cumulative[i - 1]
        }
    }

    /// One draw from the table.
    pub fn draw(&self, rng: &mut impl Rng) -> u32 {
        let x: f64 = rng.gen();
        self.cumulative.partition_point(|&c| c <= x) as u32
    }

    /// Draws `per_pair` negatives, redrawing (boundedly) any that collide
    /// with `exclude`.
    pub fn draw_negatives(&self, rng: &mut impl Rng, exclude: u32) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.per_pair);
        self.draw_negatives_into(rng, exclude, &mut out);
        out
    }

    pub fn draw_negatives_into(&self, rng: &mut impl Rng, exclude: u32, out: &mut Vec<u32>) {
        out.clear();
        for _ in 0..self.per_pair {
            let mut pick = self.draw(rng);
            let mut tries = 0;
            while pick == exclude && tries < MAX_REDRAWS {
                pick = self.draw(rng);
                tries += 1;
            }
            if pick == exclude {
                log::warn!("negative sampling could not avoid entity index {exclude}");
            }
            out.push(pick);
        }
    }
}
