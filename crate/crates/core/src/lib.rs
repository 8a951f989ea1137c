//! Knowledge mining over plain-text enterprise documents.
//!
//! The crate turns a corpus into a knowledge base of *topic cards*: entities
//! with aliases, definitions, and the top related topics, documents and people.
//! Stages, in pipeline order:
//!
//! - [`corpus`]: JSONL ingestion, sentence splitting, tokenization.
//! - [`nertag`]: hashed-feature token scorer trained with focal loss, BIO
//!   constrained Viterbi decoding, mention extraction, data augmentation.
//! - [`topicrank`]: candidate store with global counters, NER-frequency
//!   shortlist, gradient-boosted-trees reranker, AUC.
//! - [`defmine`]: sentence classification into five definition categories,
//!   pattern-based topic extraction, opinion-lexicon filtering.
//! - [`cardbuild`]: BM25 topic-document matrix, batched randomized SVD under a
//!   memory budget, relatedness, conflation and card assembly.
//! - [`pipeline`]: end-to-end orchestration, semi-streaming updates and
//!   deletions, knowledge-base export.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases at
//! the crate root fix the scalar to `f64`, which is what the pipeline uses.

// `!(x > 0.0)` is used on purpose so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cardbuild;
pub mod corpus;
pub mod defmine;
mod hashing;
pub mod nertag;
pub mod pipeline;
mod scalar;
pub mod topicrank;

pub use scalar::Scalar;

/// Per-token label scores in `f64`.
pub type ScoreMatrix = nertag::ScoreMatrix<f64>;
/// Tagger model with `f64` weights.
pub type TaggerModel = nertag::TaggerModel<f64>;
/// Ranker features in `f64`.
pub type RankFeatures = topicrank::RankFeatures<f64>;
/// Gradient boosted trees with `f64` leaves.
pub type GbdtModel = topicrank::GbdtModel<f64>;
/// Sentence classifier with `f64` weights.
pub type SentenceClassifier = defmine::SentenceClassifier<f64>;
/// BM25 parameters in `f64`.
pub type Bm25Params = cardbuild::Bm25Params<f64>;
/// Sparse topic-document matrix of `f64` BM25 weights.
pub type SparseTopicDocMatrix = cardbuild::SparseTopicDocMatrix<f64>;
/// Topic, document and user embeddings in `f64`.
pub type EmbeddingSpace = cardbuild::EmbeddingSpace<f64>;
/// Randomized SVD factors in `f64`.
pub type SvdFactors = cardbuild::SvdFactors<f64>;
