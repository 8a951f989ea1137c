//! Topic candidate aggregation and ranking.
//!
//! Mentions are folded into a [`CandidateStore`]; [`shortlist`] keeps the
//! most frequently detected keys, and [`rerank_and_filter`] reorders them by
//! a [`GbdtModel`] trained on counting and ratio features.

mod features;
mod gbdt;
mod metrics;
mod store;

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use features::{compute_features, RankFeatures, FEATURE_NAMES, N_FEATURES};
pub use gbdt::{cross_validate_auc, score_topic, train_gbdt, GbdtConfig, GbdtModel, Node, Tree};
pub use metrics::auc;
pub use store::{
    normalize_key, read_snapshot, shortlist, Accumulated, CandidateStore, DocContribution, KeyContribution,
    TopicCandidate,
};

use crate::Scalar;

#[derive(Debug, Error)]
pub enum RankError {
    #[error("surface {0:?} normalizes to an empty key")]
    EmptyKey(String),
    #[error("mention from {mention_doc} passed while accumulating {doc_id}")]
    ForeignMention { doc_id: String, mention_doc: String },
    #[error("document {0} is present in both stores")]
    DuplicateDocument(String),
    #[error("both classes must be present")]
    SingleClass,
    #[error("label must be 0 or 1, got {0:?}")]
    BadLabel(String),
    #[error("{scores} scores but {labels} labels")]
    LengthMismatch { scores: usize, labels: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("malformed input: {0}")]
    Format(String),
    #[error("failed to access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedTopic {
    pub key: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedTopicList {
    /// Non-increasing by score; equal scores ordered by key.
    pub topics: Vec<RankedTopic>,
    pub shortlist_size: usize,
    pub top_k: usize,
    pub min_score: f64,
}

impl RankedTopicList {
    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.topics.iter().map(|t| t.key.as_str())
    }
}

/// Scores each shortlisted key, sorts descending, keeps at most `top_k`
/// entries scoring at least `min_score`. Keys absent from the store are
/// skipped.
pub fn rerank_and_filter<T: Scalar>(
    shortlist: &[String],
    store: &CandidateStore,
    model: &GbdtModel<T>,
    top_k: usize,
    min_score: f64,
) -> RankedTopicList {
    let mut topics: Vec<RankedTopic> = shortlist
        .iter()
        .filter_map(|k| store.get(k))
        .map(|c| RankedTopic {
            key: c.key.clone(),
            score: model.score(&compute_features::<T>(c)).as_f64(),
        })
        .filter(|t| t.score >= min_score)
        .collect();
    topics.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.key.cmp(&b.key)));
    topics.truncate(top_k);
    RankedTopicList {
        topics,
        shortlist_size: shortlist.len(),
        top_k,
        min_score,
    }
}

/// Reads a `key,label` CSV (header optional) into a key → 0/1 map.
pub fn read_label_csv<R: Read>(reader: R) -> Result<HashMap<String, u8>, RankError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(false)
        .from_reader(reader);
    let mut out = HashMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| RankError::Format(e.to_string()))?;
        if rec.len() != 2 {
            return Err(RankError::Format(format!("row {}: expected key,label", i + 1)));
        }
        let (key, label) = (rec[0].trim(), rec[1].trim());
        if i == 0 && key == "key" && label == "label" {
            continue;
        }
        let y = match label {
            "0" => 0,
            "1" => 1,
            other => return Err(RankError::BadLabel(other.to_string())),
        };
        out.insert(normalize_key(key)?, y);
    }
    Ok(out)
}

pub fn read_label_file(path: impl AsRef<Path>) -> Result<HashMap<String, u8>, RankError> {
    let file = std::fs::File::open(path.as_ref()).map_err(|source| RankError::Io {
        path: path.as_ref().display().to_string(),
        source,
    })?;
    read_label_csv(file)
}

/// Joins candidates with labels; unlabeled candidates are skipped.
pub fn labeled_rows<T: Scalar>(
    candidates: &[TopicCandidate],
    labels: &HashMap<String, u8>,
) -> Vec<(RankFeatures<T>, u8)> {
    candidates
        .iter()
        .filter_map(|c| labels.get(&c.key).map(|&y| (compute_features(c), y)))
        .collect()
}
