//! Topic-partitioned passage retrieval: per-topic inverted-file partitions over
//! passage embeddings, exact and approximate search with optional topic weighting,
//! and evidence merging across subqueries.

mod bench;
mod embed;
mod kmeans;
mod partition;
mod search;

pub use bench::{benchmark, write_benchmark_csv, BenchQuery, BenchRow};
pub use embed::{normalize, EmbeddingProvider, HashingEmbedder, HttpEmbedder};
pub use kmeans::{kmeans, KMeans};
pub use partition::{cluster_count, elbow_threshold, probe_count, relevant_topics, EpsilonMode};
pub use search::{
    build_index, load_index, merge_evidence, save_index, EvidenceSet, IndexConfig, ProbeRule, ScoredPassage,
    SearchMode, SearchOutcome, SearchParams, TopicIndex, TopicPartition,
};

use thiserror::Error;

use crate::eval::EvalError;
use crate::matrix::MatrixError;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("embedding dimension {found} does not match {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("zero vector for {0}")]
    ZeroVector(String),
    #[error("index holds no passages")]
    EmptyIndex,
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("embedding provider: {0}")]
    Embedding(String),
    #[error("index metadata: {0}")]
    Metadata(String),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
