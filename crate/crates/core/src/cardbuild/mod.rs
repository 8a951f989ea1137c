//! Topic cards from a BM25 topic-document matrix.
//!
//! The matrix is factored by a randomized SVD that streams document batches
//! under a byte budget; topics, documents and users share one embedding
//! space in which relatedness is a dot product.

mod bm25;
mod card;
mod conflate;
mod embed;
mod linalg;
mod rsvd;

use thiserror::Error;

pub use bm25::{bm25_idf, bm25_weight, build_matrix, Bm25Params, BuiltMatrix, DocTermStats, SparseTopicDocMatrix};
pub use card::{
    build_card, rerank_related_docs, CardConfig, CardDefinition, CardInput, DocSignals, RerankWeights, TopicCard,
};
pub use conflate::{
    acronym_key_pairs, conflate, conflate_topics, conflation_threshold, extract_acronym_aliases, jaccard,
    passes_checks, trigram_jaccard, Conflation, ConflationCandidate, ConflationConfig,
};
pub use embed::{
    build_user_table, read_embeddings, relatedness, top_k_related, top_k_related_where, user_embedding,
    write_embeddings, EmbeddingKind, EmbeddingSpace, EmbeddingTable, Related,
};
pub use rsvd::{batched_randomized_svd, required_bytes, MemoryTracker, SvdConfig, SvdFactors};

#[derive(Debug, Error)]
pub enum CardError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("memory budget of {budget} bytes is too small; at least {minimum} bytes are needed")]
    BudgetTooSmall { budget: u64, minimum: u64 },
    #[error("allocating {what} would use {needed} bytes, over the {budget} byte budget")]
    OverBudget { what: String, needed: u64, budget: u64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("{0:?} is not in the embedding space")]
    UnknownId(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error("failed to access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}
