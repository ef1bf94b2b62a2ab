//! Joint entity and category embeddings over a category hierarchy.
//!
//! The crate trains skip-gram style embeddings from an entity co-occurrence
//! corpus where each training pair also predicts the target's categories: the
//! flat variant (CE) uses the direct categories, the hierarchical variant
//! (HCE) spreads the category signal over all ancestors with weights that
//! fall off with distance. On top of the trainer sit two evaluation stacks:
//! concept categorization (clustering and nearest-neighbor classification
//! scored by purity) and dataless hierarchical classification (sparse
//! bag-of-entities documents matched to a label tree through a Hungarian
//! densified similarity, scored by micro/macro F1).
//!
//! Start with the runnable examples: `hierarchy_weights`, `train_embeddings`,
//! `concept_categorization`, `dataless_classification`. The `catvec` binary
//! wires the same library into a small set of subcommands.

pub mod assignment;
pub mod categorize;
pub mod cli;
pub mod corpus;
pub mod dataless;
pub mod embedding;
pub mod error;
pub(crate) mod fileio;
pub mod hierarchy;
pub mod sparse;
pub mod synth;
pub mod trainer;

pub use assignment::{brute_force_match, hungarian_match, Assignment};
pub use categorize::{
    agglomerative, evaluate_concepts, kmeans, nn_classify, purity, ClusteringResult,
    ConceptEvalConfig, ConceptReport, GoldStandard, Linkage, Metric, Protocol,
};
pub use corpus::{CorpusReport, NegativeSampler, TrainingCorpus, TrainingPair, Vocab};
pub use dataless::{
    bottom_up_classify, bottom_up_classify_top1, densified_similarity, entity_pair_similarity,
    evaluate_dataless, leaf_similarities, micro_macro_f1, read_gold_labels, ConfusionCounts,
    DatalessConfig, DatalessReport, F1Scores, LabelNode, LabelTree,
};
pub use embedding::{init_model, write_checkpoint, EmbeddingStore, ExportSet, Matrix};
pub use error::{Error, Result};
pub use hierarchy::{
    break_cycles, load_hierarchy, load_hierarchy_pruned, read_edge_file, read_label_file,
    read_prune_file, AncestorEntry, AncestorWeights, CategoryDag, ParentMap, RepairReport,
};
pub use sparse::{cosine_sparse, read_documents_file, EsaVector, DEFAULT_ESA_SIZE};
pub use trainer::{pair_loss, pair_step, train, ModelKind, TrainConfig, TrainOutcome};
