//! Command-line entry points. Each subcommand reads its inputs, runs one
//! pipeline stage, prints a machine-parseable line report, and writes a
//! `key=value` manifest recording the resolved configuration, input digests,
//! outputs, and wall-clock duration, so any run can be reproduced.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::categorize::{ConceptEvalConfig, GoldStandard, Metric, Protocol};
use crate::corpus::TrainingCorpus;
use crate::dataless::{evaluate_dataless, read_gold_labels, DatalessConfig, LabelTree};
use crate::embedding::{EmbeddingStore, ExportSet};
use crate::error::{Error, Result};
use crate::fileio;
use crate::hierarchy::{
    load_hierarchy_pruned, read_edge_file, read_label_file, read_prune_file, CategoryDag,
};
use crate::sparse::{read_documents_file, DEFAULT_ESA_SIZE};
use crate::trainer::{train, ModelKind, TrainConfig};

/// Environment variable naming a base directory for relative input paths
/// that do not resolve from the working directory.
pub const DATA_DIR_VAR: &str = "CATVEC_DATA_DIR";

#[derive(Parser)]
#[command(
    name = "catvec",
    version,
    about = "Joint entity/category embeddings: hierarchy ingestion, training, and evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a category hierarchy artifact from edge and label files.
    BuildHierarchy(BuildHierarchyArgs),
    /// Train entity and category embeddings on a co-occurrence corpus.
    Train(TrainArgs),
    /// Score embeddings by concept-categorization purity.
    EvalConcept(EvalConceptArgs),
    /// Classify sparse documents against a label tree and score F1.
    EvalDataless(EvalDatalessArgs),
    /// Re-export an embedding file, optionally restricted to one id kind.
    Export(ExportArgs),
}

#[derive(Args)]
struct BuildHierarchyArgs {
    /// Category edge file: child<TAB>parent lines.
    #[arg(long)]
    edges: PathBuf,
    /// Entity label file: entity<TAB>category lines.
    #[arg(long)]
    labels: PathBuf,
    /// Optional prune list: one category id per line, removed before repair.
    #[arg(long)]
    prune: Option<PathBuf>,
    /// Output artifact path.
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    /// Corpus file: target<TAB>context entities lines.
    #[arg(long)]
    corpus: PathBuf,
    /// Hierarchy artifact from build-hierarchy.
    #[arg(long)]
    hierarchy: PathBuf,
    /// Output embedding file.
    #[arg(long, short)]
    output: PathBuf,
    /// key=value configuration file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Also dump the corpus vocabulary (entity<TAB>frequency) here.
    #[arg(long)]
    save_vocab: Option<PathBuf>,
    #[arg(long, value_parser = parse_model)]
    model: Option<ModelKind>,
    #[arg(long)]
    dim: Option<usize>,
    /// Negatives drawn per positive pair.
    #[arg(long)]
    negatives_per_pair: Option<usize>,
    /// Pairs between learning-rate updates.
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr_initial: Option<f64>,
    #[arg(long)]
    lr_final: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Exponent on context frequencies in the negative sampler.
    #[arg(long)]
    smoothing_exponent: Option<f64>,
    /// Per-epoch shuffle window, in pairs.
    #[arg(long)]
    shuffle_block: Option<usize>,
    /// Drop ancestors farther than this before weight normalization.
    #[arg(long)]
    max_ancestor_depth: Option<usize>,
}

#[derive(Args)]
struct EvalConceptArgs {
    /// Embedding file produced by train or export.
    #[arg(long)]
    embeddings: PathBuf,
    /// Concept dataset: class<TAB>concept lines with an optional tag column.
    #[arg(long)]
    dataset: PathBuf,
    /// cluster (grid of clustering cells) or nn (nearest category vector).
    #[arg(long, default_value = "cluster", value_parser = parse_protocol)]
    protocol: Protocol,
    /// Distance for nn classification: euclidean or cosine.
    #[arg(long, default_value = "euclidean", value_parser = parse_metric)]
    metric: Metric,
    /// Seed of the validation/test split.
    #[arg(long, default_value_t = 1)]
    split_seed: u64,
    #[arg(long, default_value_t = 100)]
    kmeans_max_iters: usize,
    /// Keep only dataset rows carrying this tag.
    #[arg(long)]
    subset: Option<String>,
    /// Manifest path (default: eval-concept.manifest).
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct EvalDatalessArgs {
    /// Document vectors: doc_id<TAB>entity:weight ... lines.
    #[arg(long)]
    docs: PathBuf,
    /// Label tree: label<TAB>parent<TAB>sparse vector lines.
    #[arg(long)]
    labels: PathBuf,
    /// Gold labels: doc_id<TAB>label ... lines.
    #[arg(long)]
    gold: PathBuf,
    /// Embedding file backing entity similarities.
    #[arg(long)]
    embeddings: PathBuf,
    /// Entity-pair similarities below this are zeroed.
    #[arg(long, default_value_t = 0.85)]
    cutoff: f64,
    /// Secondary leaves are kept at delta times the best similarity.
    #[arg(long, default_value_t = 0.95)]
    delta: f64,
    /// Average matched similarities weighted by the sparse weights.
    #[arg(long)]
    weighted: bool,
    /// Maximum entries kept per sparse vector.
    #[arg(long, default_value_t = DEFAULT_ESA_SIZE)]
    esa_size: usize,
    /// Manifest path (default: eval-dataless.manifest).
    #[arg(long)]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct ExportArgs {
    /// Embedding file to read.
    #[arg(long)]
    input: PathBuf,
    /// Destination file.
    #[arg(long, short)]
    output: PathBuf,
    /// entities, categories, or both.
    #[arg(long, default_value = "both", value_parser = parse_export_set)]
    which: ExportSet,
}

fn parse_model(s: &str) -> Result<ModelKind> {
    s.parse()
}

fn parse_protocol(s: &str) -> Result<Protocol> {
    s.parse()
}

fn parse_metric(s: &str) -> Result<Metric> {
    s.parse()
}

fn parse_export_set(s: &str) -> Result<ExportSet> {
    s.parse()
}

/// Resolves an input path: as given when it exists or is absolute, otherwise
/// relative to `$CATVEC_DATA_DIR` when that lands on an existing file.
fn resolve(path: &Path) -> PathBuf {
    if path.is_absolute() || path.exists() {
        return path.to_path_buf();
    }
    if let Ok(base) = std::env::var(DATA_DIR_VAR) {
        let joined = Path::new(&base).join(path);
        if joined.exists() {
            return joined;
        }
    }
    path.to_path_buf()
}

/// Ordered `key=value` run record.
struct RunManifest {
    entries: Vec<(String, String)>,
    started: Instant,
}

impl RunManifest {
    fn new(command: &str) -> Self {
        RunManifest {
            entries: vec![("command".to_string(), command.to_string())],
            started: Instant::now(),
        }
    }

    fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    fn input(&mut self, name: &str, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        use sha2::{Digest, Sha256};
        self.push(
            format!("input_digest.{name}"),
            hex::encode(Sha256::digest(&bytes)),
        );
        Ok(())
    }

    fn write(mut self, path: &Path) -> Result<()> {
        let ms = self.started.elapsed().as_millis();
        self.push("duration_ms", ms);
        let mut w = fileio::create(path)?;
        for (key, value) in &self.entries {
            writeln!(w, "{key}={value}").map_err(|e| Error::io(path.display().to_string(), e))?;
        }
        fileio::finish(w, path)
    }
}

fn manifest_path_for(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest");
    output.with_file_name(name)
}

/// Parses the CLI and runs one command, mapping errors to exit codes:
/// 2 missing input, 3 parse, 4 configuration, 5 coverage, 6 structure.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::BuildHierarchy(args) => cmd_build_hierarchy(args),
        Command::Train(args) => cmd_train(args),
        Command::EvalConcept(args) => cmd_eval_concept(args),
        Command::EvalDataless(args) => cmd_eval_dataless(args),
        Command::Export(args) => cmd_export(args),
    }
}

fn cmd_build_hierarchy(args: BuildHierarchyArgs) -> Result<()> {
    let mut manifest = RunManifest::new("build-hierarchy");
    let edge_path = resolve(&args.edges);
    let label_path = resolve(&args.labels);
    let edges = read_edge_file(&edge_path)?;
    let labels = read_label_file(&label_path)?;
    manifest.input("edges", &edge_path)?;
    manifest.input("labels", &label_path)?;
    let prune = match &args.prune {
        Some(p) => {
            let p = resolve(p);
            let set = read_prune_file(&p)?;
            manifest.input("prune", &p)?;
            set
        }
        None => BTreeSet::new(),
    };

    let (dag, report) = load_hierarchy_pruned(edges, labels, &prune)?;
    dag.save_artifact(&args.output)?;

    println!("categories={}", dag.category_count());
    println!("entities={}", dag.entity_count());
    println!("pruned_categories={}", report.pruned_categories.len());
    for c in &report.pruned_categories {
        println!("pruned_category={c}");
    }
    println!("removed_edges={}", report.removed_edges.len());
    for (child, parent) in &report.removed_edges {
        println!("removed_edge={child}->{parent}");
    }
    println!("dropped_entities={}", report.dropped_entities);

    manifest.push("output.artifact", args.output.display());
    manifest.write(&manifest_path_for(&args.output))
}

fn apply_config_pair(cfg: &mut TrainConfig, key: &str, value: &str) -> Result<()> {
    fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
        value
            .parse()
            .map_err(|_| Error::Config(format!("bad value for {key}: {value:?}")))
    }
    match key {
        "model" => cfg.model = value.parse()?,
        "dim" => cfg.dim = num(key, value)?,
        "negatives_per_pair" => cfg.negatives_per_pair = num(key, value)?,
        "batch_size" => cfg.batch_size = num(key, value)?,
        "epochs" => cfg.epochs = num(key, value)?,
        "lr_initial" => cfg.lr_initial = num(key, value)?,
        "lr_final" => cfg.lr_final = num(key, value)?,
        "seed" => cfg.seed = num(key, value)?,
        "workers" => cfg.workers = num(key, value)?,
        "smoothing_exponent" => cfg.smoothing_exponent = num(key, value)?,
        "shuffle_block" => cfg.shuffle_block = num(key, value)?,
        "max_ancestor_depth" => {
            cfg.max_ancestor_depth = match value {
                "unlimited" | "none" => None,
                v => Some(num(key, v)?),
            }
        }
        unknown => {
            return Err(Error::Config(format!(
                "unknown configuration key {unknown:?}"
            )))
        }
    }
    Ok(())
}

fn read_config_file(cfg: &mut TrainConfig, path: &Path) -> Result<()> {
    let name = path.display().to_string();
    for (line_no, line) in fileio::data_lines(path)? {
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::parse(
                &name,
                line_no,
                "expected key=value".to_string(),
            ));
        };
        apply_config_pair(cfg, key.trim(), value.trim())?;
    }
    Ok(())
}

/// Precedence: command-line flags over config-file entries over defaults.
fn resolve_train_config(args: &TrainArgs) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::default();
    if let Some(path) = &args.config {
        read_config_file(&mut cfg, &resolve(path))?;
    }
    if let Some(v) = args.model {
        cfg.model = v;
    }
    if let Some(v) = args.dim {
        cfg.dim = v;
    }
    if let Some(v) = args.negatives_per_pair {
        cfg.negatives_per_pair = v;
    }
    if let Some(v) = args.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = args.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = args.lr_initial {
        cfg.lr_initial = v;
    }
    if let Some(v) = args.lr_final {
        cfg.lr_final = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.workers {
        cfg.workers = v;
    }
    if let Some(v) = args.smoothing_exponent {
        cfg.smoothing_exponent = v;
    }
    if let Some(v) = args.shuffle_block {
        cfg.shuffle_block = v;
    }
    if let Some(v) = args.max_ancestor_depth {
        cfg.max_ancestor_depth = Some(v);
    }
    Ok(cfg)
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let mut manifest = RunManifest::new("train");
    let cfg = resolve_train_config(&args)?;
    let corpus_path = resolve(&args.corpus);
    let hierarchy_path = resolve(&args.hierarchy);
    let (corpus, report) = TrainingCorpus::load_file(&corpus_path)?;
    let dag = CategoryDag::load_artifact(&hierarchy_path)?;

    let outcome = train(&corpus, &dag, &cfg)?;
    for (epoch, loss) in outcome.epoch_mean_loss.iter().enumerate() {
        println!("{}\t{:.8e}", epoch + 1, loss);
    }
    outcome.store.export(&args.output, ExportSet::Both)?;
    if let Some(vocab_path) = &args.save_vocab {
        corpus.save_vocab(vocab_path)?;
    }

    for (key, value) in cfg.echo() {
        manifest.push(format!("config.{key}"), value);
    }
    manifest.push("seed", cfg.seed);
    manifest.input("corpus", &corpus_path)?;
    manifest.input("hierarchy", &hierarchy_path)?;
    if let Some(path) = &args.config {
        manifest.input("config", &resolve(path))?;
    }
    manifest.push("corpus_pairs", corpus.pair_count());
    manifest.push("vocab_size", corpus.vocab().len());
    manifest.push("skipped_empty_records", report.skipped_empty_records);
    manifest.push("unlabeled_targets", outcome.unlabeled_targets);
    manifest.push("output.embeddings", args.output.display());
    if let Some(vocab_path) = &args.save_vocab {
        manifest.push("output.vocab", vocab_path.display());
    }
    manifest.write(&manifest_path_for(&args.output))
}

fn cmd_eval_concept(args: EvalConceptArgs) -> Result<()> {
    let mut manifest = RunManifest::new("eval-concept");
    let embeddings_path = resolve(&args.embeddings);
    let dataset_path = resolve(&args.dataset);
    let store = EmbeddingStore::import(&embeddings_path)?;
    let mut gold = GoldStandard::load(&dataset_path)?;
    if let Some(tag) = &args.subset {
        gold = gold.subset(tag);
        if gold.is_empty() {
            return Err(Error::Coverage(format!(
                "no dataset rows carry the tag {tag:?}"
            )));
        }
    }

    let cfg = ConceptEvalConfig {
        protocol: args.protocol,
        metric: args.metric,
        split_seed: args.split_seed,
        kmeans_max_iters: args.kmeans_max_iters,
    };
    let report = crate::categorize::evaluate_concepts(&store, &gold, &cfg)?;

    for skipped in &report.skipped {
        log::warn!("concept {skipped} missing from the embedding file; skipped");
    }
    for cell in &report.cells {
        println!(
            "cell={} validation_purity={:.6}",
            cell.name, cell.validation_purity
        );
    }
    println!("best_cell={}", report.best_cell);
    println!(
        "best_validation_purity={:.6}",
        report.best_validation_purity
    );
    println!("test_purity={:.6}", report.test_purity);
    println!("validation_size={}", report.validation_size);
    println!("test_size={}", report.test_size);
    println!("skipped={}", report.skipped.len());

    manifest.push("config.protocol", args.protocol);
    manifest.push("config.metric", args.metric);
    manifest.push("config.split_seed", args.split_seed);
    manifest.push("config.kmeans_max_iters", args.kmeans_max_iters);
    if let Some(tag) = &args.subset {
        manifest.push("config.subset", tag);
    }
    manifest.push("seed", args.split_seed);
    manifest.input("embeddings", &embeddings_path)?;
    manifest.input("dataset", &dataset_path)?;
    manifest.push("best_cell", &report.best_cell);
    manifest.push("test_purity", format!("{:.6}", report.test_purity));
    let manifest_path = args
        .manifest
        .unwrap_or_else(|| PathBuf::from("eval-concept.manifest"));
    manifest.write(&manifest_path)
}

fn cmd_eval_dataless(args: EvalDatalessArgs) -> Result<()> {
    let mut manifest = RunManifest::new("eval-dataless");
    let docs_path = resolve(&args.docs);
    let labels_path = resolve(&args.labels);
    let gold_path = resolve(&args.gold);
    let embeddings_path = resolve(&args.embeddings);

    let cfg = DatalessConfig {
        cutoff: args.cutoff,
        delta: args.delta,
        weighted: args.weighted,
    };
    cfg.validate()?;
    let docs = read_documents_file(&docs_path, args.esa_size)?;
    let tree = LabelTree::load(&labels_path, args.esa_size)?;
    let gold = read_gold_labels(&gold_path)?;
    let store = EmbeddingStore::import(&embeddings_path)?;

    let report = evaluate_dataless(&docs, &gold, &tree, &store, &cfg)?;
    println!("micro_f1={:.6}", report.micro_f1);
    println!("macro_f1={:.6}", report.macro_f1);
    println!("micro_f1_at_1={:.6}", report.micro_f1_at_1);
    println!("documents={}", report.documents);
    println!("empty_predictions={}", report.empty_predictions);
    println!("docs_without_vectors={}", report.docs_without_vectors.len());
    for (label, counts) in &report.per_label {
        println!(
            "label={label} tp={} fp={} fn={}",
            counts.true_pos, counts.false_pos, counts.false_neg
        );
    }

    manifest.push("config.cutoff", args.cutoff);
    manifest.push("config.delta", args.delta);
    manifest.push("config.weighted", args.weighted);
    manifest.push("config.esa_size", args.esa_size);
    manifest.input("docs", &docs_path)?;
    manifest.input("labels", &labels_path)?;
    manifest.input("gold", &gold_path)?;
    manifest.input("embeddings", &embeddings_path)?;
    manifest.push("micro_f1", format!("{:.6}", report.micro_f1));
    manifest.push("macro_f1", format!("{:.6}", report.macro_f1));
    manifest.push("micro_f1_at_1", format!("{:.6}", report.micro_f1_at_1));
    let manifest_path = args
        .manifest
        .unwrap_or_else(|| PathBuf::from("eval-dataless.manifest"));
    manifest.write(&manifest_path)
}

fn cmd_export(args: ExportArgs) -> Result<()> {
    let mut manifest = RunManifest::new("export");
    let input_path = resolve(&args.input);
    let store = EmbeddingStore::import(&input_path)?;
    store.export(&args.output, args.which)?;
    println!("entities={}", store.entity_count());
    println!("categories={}", store.category_count());
    println!("dim={}", store.dim());

    manifest.push("config.which", format!("{:?}", args.which).to_lowercase());
    manifest.input("input", &input_path)?;
    manifest.push("output.embeddings", args.output.display());
    manifest.write(&manifest_path_for(&args.output))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_file_feeds_train_config_and_flags_override() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("train.conf");
        std::fs::write(
            &path,
            "# comment\nmodel=ce\ndim=32\nmax_ancestor_depth=none\nseed=9\n",
        )
        .unwrap();
        let mut cfg = TrainConfig::default();
        read_config_file(&mut cfg, &path).unwrap();
        assert_eq!(cfg.model, ModelKind::Ce);
        assert_eq!(cfg.dim, 32);
        assert_eq!(cfg.max_ancestor_depth, None);
        assert_eq!(cfg.seed, 9);

        std::fs::write(&path, "dim=48\nbogus_key=1\n").unwrap();
        let err = read_config_file(&mut TrainConfig::default(), &path).unwrap_err();
        assert!(matches!(err, Error::Config(_)));

        std::fs::write(&path, "no equals sign\n").unwrap();
        let err = read_config_file(&mut TrainConfig::default(), &path).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn manifest_orders_entries_and_appends_duration() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.manifest");
        let mut m = RunManifest::new("train");
        m.push("config.dim", 100);
        m.write(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "command=train");
        assert_eq!(lines[1], "config.dim=100");
        assert!(lines[2].starts_with("duration_ms="));
    }

    #[test]
    fn manifest_path_sits_next_to_the_output() {
        assert_eq!(
            manifest_path_for(Path::new("/tmp/out/model.emb")),
            Path::new("/tmp/out/model.emb.manifest")
        );
    }
}
