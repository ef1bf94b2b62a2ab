//! Negative-sampling SGD over entity/category pairs.
//!
//! Each training pair (target, context) contributes one positive logistic
//! term for the context and one for every weighted category of the target,
//! plus mirrored terms for `k` sampled negatives. CE weights the direct
//! categories at 1 each; HCE distributes inverse-distance weights over the
//! whole ancestor set, so both models run through the same step code and
//! coincide exactly when the weight lists coincide.
//!
//! Updates are plain per-pair SGD with a linearly decaying learning rate.
//! One worker is bitwise deterministic for a fixed seed; several workers
//! share the matrices lock-free and tolerate lost updates, trading
//! reproducibility for throughput.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{NegativeSampler, TrainingCorpus, TrainingPair};
use crate::embedding::{init_model, EmbeddingStore};
use crate::error::{Error, Result};
use crate::hierarchy::CategoryDag;

/// Which category weighting the trainer uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Direct categories only, weight 1 each.
    Ce,
    /// All ancestors, inverse-distance weights normalized to 1.
    Hce,
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ModelKind::Ce => "ce",
            ModelKind::Hce => "hce",
        })
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ce" => Ok(ModelKind::Ce),
            "hce" => Ok(ModelKind::Hce),
            other => Err(Error::Config(format!(
                "unknown model {other:?}; use ce or hce"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub model: ModelKind,
    pub dim: usize,
    /// Negatives drawn per positive pair.
    pub negatives_per_pair: usize,
    /// Pairs between learning-rate updates; also the reporting granularity.
    pub batch_size: usize,
    pub epochs: usize,
    pub lr_initial: f64,
    pub lr_final: f64,
    pub seed: u64,
    pub workers: usize,
    /// Exponent applied to context frequencies in the negative sampler.
    pub smoothing_exponent: f64,
    /// Shuffle window: pair order is shuffled within blocks of this many
    /// pairs each epoch. The default covers the whole epoch.
    pub shuffle_block: usize,
    /// HCE only: ancestors farther than this many upward steps from the
    /// direct categories are dropped from the weight lists.
    pub max_ancestor_depth: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            model: ModelKind::Hce,
            dim: 100,
            negatives_per_pair: 10,
            batch_size: 500,
            epochs: 5,
            lr_initial: 0.025,
            lr_final: 0.025 / 100.0,
            seed: 1,
            workers: 1,
            smoothing_exponent: 0.75,
            shuffle_block: usize::MAX,
            max_ancestor_depth: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("dim must be positive".into()));
        }
        if self.negatives_per_pair == 0 {
            return Err(Error::Config("negatives-per-pair must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch-size must be positive".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("workers must be positive".into()));
        }
        if self.shuffle_block == 0 {
            return Err(Error::Config("shuffle-block must be positive".into()));
        }
        if !(self.lr_initial.is_finite() && self.lr_initial > 0.0) {
            return Err(Error::Config("lr-initial must be positive".into()));
        }
        if !(self.lr_final.is_finite() && self.lr_final > 0.0) {
            return Err(Error::Config("lr-final must be positive".into()));
        }
        if self.lr_final > self.lr_initial {
            return Err(Error::Config("lr-final must not exceed lr-initial".into()));
        }
        if !(self.smoothing_exponent.is_finite() && self.smoothing_exponent >= 0.0) {
            return Err(Error::Config(
                "smoothing-exponent must be finite and nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Manifest/sidecar echo of every field.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut kv = vec![
            ("model".to_string(), self.model.to_string()),
            ("dim".to_string(), self.dim.to_string()),
            (
                "negatives_per_pair".to_string(),
                self.negatives_per_pair.to_string(),
            ),
            ("batch_size".to_string(), self.batch_size.to_string()),
            ("epochs".to_string(), self.epochs.to_string()),
            ("lr_initial".to_string(), self.lr_initial.to_string()),
            ("lr_final".to_string(), self.lr_final.to_string()),
            ("seed".to_string(), self.seed.to_string()),
            ("workers".to_string(), self.workers.to_string()),
            (
                "smoothing_exponent".to_string(),
                self.smoothing_exponent.to_string(),
            ),
            ("shuffle_block".to_string(), self.shuffle_block.to_string()),
        ];
        kv.push((
            "max_ancestor_depth".to_string(),
            self.max_ancestor_depth
                .map_or("unlimited".to_string(), |d| d.to_string()),
        ));
        kv
    }
}

/// Trained store plus the per-epoch mean loss trace.
#[derive(Debug)]
pub struct TrainOutcome {
    pub store: EmbeddingStore,
    pub epoch_mean_loss: Vec<f64>,
    /// Distinct target entities that had no labels in the hierarchy and were
    /// trained entity-only.
    pub unlabeled_targets: usize,
    /// Final positions of each worker's RNG stream, for checkpoint metadata.
    pub rng_positions: Vec<u128>,
}

/// Dot products are clamped to this magnitude before the sigmoid; outside
/// the clamp the loss plateaus, so the matching gradient is exactly zero.
pub const DOT_CLAMP: f64 = 30.0;

#[inline]
fn logistic_terms(dot: f64, positive: bool) -> (f64, f64) {
    let clamped = dot.clamp(-DOT_CLAMP, DOT_CLAMP);
    let saturated = dot != clamped;
    let x = if positive { clamped } else { -clamped };
    // loss term: -log sigmoid(x), computed stably.
    let loss = if x >= 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    };
    let coef = if saturated {
        0.0
    } else {
        let s = 1.0 / (1.0 + (-clamped).exp());
        if positive {
            1.0 - s
        } else {
            -s
        }
    };
    (loss, coef)
}

/// Raw pointers into the three matrices. Workers share one of these; the
/// races on individual f64 lanes are the usual lock-free SGD trade and only
/// arise when `workers > 1`.
#[derive(Clone, Copy)]
struct RawView {
    entity_in: *mut f64,
    entity_out: *mut f64,
    category_in: *mut f64,
    dim: usize,
}

unsafe impl Send for RawView {}
unsafe impl Sync for RawView {}

impl RawView {
    fn of(store: &mut EmbeddingStore) -> Self {
        let dim = store.dim();
        let (ein, eout, cin) = store.matrices_mut();
        RawView {
            entity_in: ein.as_mut_ptr(),
            entity_out: eout.as_mut_ptr(),
            category_in: cin.as_mut_ptr(),
            dim,
        }
    }

    #[inline]
    unsafe fn entity_in_row(&self, r: u32) -> *mut f64 {
        self.entity_in.add(r as usize * self.dim)
    }

    #[inline]
    unsafe fn entity_out_row(&self, r: u32) -> *mut f64 {
        self.entity_out.add(r as usize * self.dim)
    }

    #[inline]
    unsafe fn category_in_row(&self, r: u32) -> *mut f64 {
        self.category_in.add(r as usize * self.dim)
    }
}

#[inline]
unsafe fn raw_dot(a: *const f64, b: *const f64, d: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..d {
        s += *a.add(i) * *b.add(i);
    }
    s
}

#[inline]
unsafe fn raw_axpy(y: *mut f64, x: *const f64, a: f64, d: usize) {
    for i in 0..d {
        *y.add(i) += a * *x.add(i);
    }
}

#[inline]
unsafe fn buf_axpy(buf: &mut [f64], x: *const f64, a: f64) {
    for (i, slot) in buf.iter_mut().enumerate() {
        *slot += a * *x.add(i);
    }
}

/// Reusable per-worker buffers so the hot loop never allocates.
#[derive(Default)]
struct Scratch {
    delta_target: Vec<f64>,
    delta_categories: Vec<f64>,
    out_coef: Vec<f64>,
    cat_coef: Vec<f64>,
    negatives: Vec<u32>,
}

/// One SGD step on a single pair at the given learning rate; returns the
/// pair's loss (nonnegative) evaluated before the update. All gradients are
/// taken at the pre-update parameters, then applied together.
fn step_raw(
    view: RawView,
    pair: TrainingPair,
    negatives: &[u32],
    weights: &[(u32, f64)],
    lr: f64,
    scratch: &mut Scratch,
) -> f64 {
    let d = view.dim;
    let nc = weights.len();
    scratch.delta_target.clear();
    scratch.delta_target.resize(d, 0.0);
    scratch.delta_categories.clear();
    scratch.delta_categories.resize(nc * d, 0.0);
    scratch.out_coef.clear();
    scratch.cat_coef.clear();

    let mut loss = 0.0;
    unsafe {
        let vt = view.entity_in_row(pair.target);

        // Phase 1: every coefficient is computed at the original parameters.
        for (oi, &orow) in std::iter::once(&pair.context)
            .chain(negatives.iter())
            .enumerate()
        {
            let positive = oi == 0;
            let o = view.entity_out_row(orow);

            let (l, coef) = logistic_terms(raw_dot(o, vt, d), positive);
            loss += l;
            scratch.out_coef.push(coef);
            buf_axpy(&mut scratch.delta_target, o, coef);

            for (ci, &(crow, w)) in weights.iter().enumerate() {
                let vc = view.category_in_row(crow);
                let (lc, coef_raw) = logistic_terms(raw_dot(o, vc, d), positive);
                loss += w * lc;
                let coef = w * coef_raw;
                scratch.cat_coef.push(coef);
                buf_axpy(&mut scratch.delta_categories[ci * d..(ci + 1) * d], o, coef);
            }
        }

        if !loss.is_finite() {
            return loss;
        }

        // Phase 2: output rows move along the original input vectors.
        for (oi, &orow) in std::iter::once(&pair.context)
            .chain(negatives.iter())
            .enumerate()
        {
            let o = view.entity_out_row(orow);
            raw_axpy(o, vt, lr * scratch.out_coef[oi], d);
            for (ci, &(crow, _)) in weights.iter().enumerate() {
                let vc = view.category_in_row(crow);
                raw_axpy(o, vc, lr * scratch.cat_coef[oi * nc + ci], d);
            }
        }

        // Phase 3: input rows absorb their accumulated gradients.
        raw_axpy(vt, scratch.delta_target.as_ptr(), lr, d);
        for (ci, &(crow, _)) in weights.iter().enumerate() {
            let vc = view.category_in_row(crow);
            raw_axpy(vc, scratch.delta_categories[ci * d..].as_ptr(), lr, d);
        }
    }
    loss
}

fn validate_rows(
    store: &EmbeddingStore,
    pair: TrainingPair,
    negatives: &[u32],
    weights: &[(u32, f64)],
) -> Result<()> {
    let ne = store.entity_count() as u32;
    for &row in [pair.target, pair.context].iter().chain(negatives) {
        if row >= ne {
            return Err(Error::Invalid(format!("entity row {row} out of range")));
        }
    }
    let ncat = store.category_count() as u32;
    for &(row, w) in weights {
        if row >= ncat {
            return Err(Error::Invalid(format!("category row {row} out of range")));
        }
        if !w.is_finite() || w < 0.0 {
            return Err(Error::Invalid(format!("bad category weight {w}")));
        }
    }
    Ok(())
}

/// Loss of one pair at the current parameters, without updating anything.
/// Mirrors [`pair_step`] term for term.
pub fn pair_loss(
    store: &EmbeddingStore,
    pair: TrainingPair,
    negatives: &[u32],
    weights: &[(u32, f64)],
) -> Result<f64> {
    validate_rows(store, pair, negatives, weights)?;
    let vt = store.entity_vector(pair.target);
    let mut loss = 0.0;
    for (oi, &orow) in std::iter::once(&pair.context)
        .chain(negatives.iter())
        .enumerate()
    {
        let positive = oi == 0;
        let o = store.entity_output_vector(orow);
        let (l, _) = logistic_terms(crate::embedding::dot(o, vt), positive);
        loss += l;
        for &(crow, w) in weights {
            let vc = store.category_vector(crow);
            let (lc, _) = logistic_terms(crate::embedding::dot(o, vc), positive);
            loss += w * lc;
        }
    }
    Ok(loss)
}

/// One supervised step: ascends the pair objective on the target's input
/// vector, the weighted category vectors, and the output vectors of the
/// context and negatives. Returns the pre-update loss.
pub fn pair_step(
    store: &mut EmbeddingStore,
    pair: TrainingPair,
    negatives: &[u32],
    weights: &[(u32, f64)],
    lr: f64,
) -> Result<f64> {
    validate_rows(store, pair, negatives, weights)?;
    let mut scratch = Scratch::default();
    let loss = step_raw(
        RawView::of(store),
        pair,
        negatives,
        weights,
        lr,
        &mut scratch,
    );
    if !loss.is_finite() {
        return Err(Error::NonFiniteGradient {
            target: store.entity_id(pair.target).to_string(),
            context: store.entity_id(pair.context).to_string(),
        });
    }
    Ok(loss)
}

/// Shuffles `order` in consecutive blocks of `block` indices.
fn shuffle_blocks(order: &mut [u32], rng: &mut ChaCha8Rng, block: usize) {
    if block >= order.len() {
        order.shuffle(rng);
        return;
    }
    for chunk in order.chunks_mut(block) {
        chunk.shuffle(rng);
    }
}

/// One entity's category rows with their update weights.
type WeightList = Box<[(u32, f64)]>;

/// Per-entity category weight lists, precomputed once per run.
fn build_weight_lists(
    corpus: &TrainingCorpus,
    dag: &CategoryDag,
    store: &EmbeddingStore,
    config: &TrainConfig,
) -> Result<(Vec<WeightList>, usize)> {
    let vocab = corpus.vocab();
    let mut is_target = vec![false; vocab.len()];
    for p in corpus.pairs() {
        is_target[p.target as usize] = true;
    }
    let mut lists: Vec<Box<[(u32, f64)]>> = vec![Box::default(); vocab.len()];
    let mut unlabeled = 0usize;
    for (idx, needed) in is_target.iter().enumerate() {
        if !needed {
            continue;
        }
        let id = vocab.id(idx as u32);
        if !dag.contains_entity(id) {
            unlabeled += 1;
            continue;
        }
        let list: Vec<(u32, f64)> = match config.model {
            ModelKind::Ce => dag
                .labels_of(id)?
                .iter()
                .map(|cat| {
                    let row = store.category_index(cat).expect("category registered");
                    (row, 1.0)
                })
                .collect(),
            ModelKind::Hce => dag
                .ancestor_weights_capped(id, config.max_ancestor_depth)?
                .entries
                .iter()
                .map(|e| {
                    let row = store
                        .category_index(&e.category)
                        .expect("category registered");
                    (row, e.weight)
                })
                .collect(),
        };
        lists[idx] = list.into_boxed_slice();
    }
    if unlabeled > 0 {
        log::warn!(
            "{unlabeled} target entities have no hierarchy labels; training them entity-only"
        );
    }
    Ok((lists, unlabeled))
}

/// Trains a fresh model on the corpus. Deterministic (bitwise) for
/// `workers == 1` under a fixed seed.
pub fn train(
    corpus: &TrainingCorpus,
    dag: &CategoryDag,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if corpus.pair_count() == 0 {
        return Err(Error::Config("training corpus has no pairs".into()));
    }

    let entities: Vec<String> = corpus.vocab().ids().map(|s| s.to_string()).collect();
    let categories: Vec<String> = dag.categories().map(|s| s.to_string()).collect();
    if categories.is_empty() {
        return Err(Error::Config("hierarchy has no categories".into()));
    }
    let mut store = init_model(entities, categories, config.dim, config.seed)?;

    let (weight_lists, unlabeled_targets) = build_weight_lists(corpus, dag, &store, config)?;
    let sampler = NegativeSampler::from_frequencies(
        &corpus.vocab().frequencies(),
        config.smoothing_exponent,
        config.negatives_per_pair,
    )?;

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(1);
    let mut worker_rngs: Vec<ChaCha8Rng> = (0..config.workers)
        .map(|w| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(16 + w as u64);
            rng
        })
        .collect();

    let pairs = corpus.pairs();
    let total_steps = config.epochs.saturating_mul(pairs.len());
    let progress = AtomicUsize::new(0);
    let lr_span = config.lr_final - config.lr_initial;
    let lr_at = |done: usize| -> f64 {
        if total_steps == 0 {
            config.lr_initial
        } else {
            config.lr_initial + lr_span * (done.min(total_steps) as f64 / total_steps as f64)
        }
    };

    let mut order: Vec<u32> = (0..pairs.len() as u32).collect();
    let mut epoch_mean_loss = Vec::with_capacity(config.epochs);

    for _epoch in 0..config.epochs {
        shuffle_blocks(&mut order, &mut shuffle_rng, config.shuffle_block);
        let view = RawView::of(&mut store);
        let chunk_len = pairs.len().div_ceil(config.workers);
        let chunks: Vec<&[u32]> = order.chunks(chunk_len.max(1)).collect();

        let epoch_loss: f64 = if config.workers == 1 || chunks.len() == 1 {
            run_chunk(
                view,
                pairs,
                chunks[0],
                &weight_lists,
                &sampler,
                &mut worker_rngs[0],
                config,
                &progress,
                &lr_at,
            )?
        } else {
            let results: Vec<Result<f64>> = std::thread::scope(|scope| {
                let mut handles = Vec::new();
                for (chunk, rng) in chunks.iter().zip(worker_rngs.iter_mut()) {
                    let weight_lists = &weight_lists;
                    let sampler = &sampler;
                    let progress = &progress;
                    let lr_at = &lr_at;
                    handles.push(scope.spawn(move || {
                        run_chunk(
                            view,
                            pairs,
                            chunk,
                            weight_lists,
                            sampler,
                            rng,
                            config,
                            progress,
                            lr_at,
                        )
                    }));
                }
                handles.into_iter().map(|h| h.join().unwrap()).collect()
            });
            let mut sum = 0.0;
            for r in results {
                sum += r?;
            }
            sum
        };
        epoch_mean_loss.push(epoch_loss / pairs.len() as f64);
    }

    let rng_positions = worker_rngs.iter().map(|r| r.get_word_pos()).collect();
    Ok(TrainOutcome {
        store,
        epoch_mean_loss,
        unlabeled_targets,
        rng_positions,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_chunk(
    view: RawView,
    pairs: &[TrainingPair],
    chunk: &[u32],
    weight_lists: &[Box<[(u32, f64)]>],
    sampler: &NegativeSampler,
    rng: &mut ChaCha8Rng,
    config: &TrainConfig,
    progress: &AtomicUsize,
    lr_at: &dyn Fn(usize) -> f64,
) -> Result<f64> {
    let mut scratch = Scratch::default();
    let mut loss_sum = 0.0;
    let mut lr = lr_at(progress.load(Ordering::Relaxed));
    for (i, &pair_idx) in chunk.iter().enumerate() {
        if i % config.batch_size == 0 && i > 0 {
            lr = lr_at(progress.load(Ordering::Relaxed));
        }
        let pair = pairs[pair_idx as usize];
        sampler.draw_negatives_into(rng, pair.context, &mut scratch.negatives);
        let negatives = std::mem::take(&mut scratch.negatives);
        let weights = &weight_lists[pair.target as usize];
        let loss = step_raw(view, pair, &negatives, weights, lr, &mut scratch);
        scratch.negatives = negatives;
        if !loss.is_finite() {
            return Err(Error::NonFiniteGradient {
                target: format!("pair index {pair_idx}, entity row {}", pair.target),
                context: format!("entity row {}", pair.context),
            });
        }
        loss_sum += loss;
        progress.fetch_add(1, Ordering::Relaxed);
    }
    Ok(loss_sum)
}
