use serde::{Deserialize, Serialize};

use super::TopicCandidate;
use crate::Scalar;

pub const N_FEATURES: usize = 9;

pub const FEATURE_NAMES: [&str; N_FEATURES] = [
    "ner_freq",
    "doc_freq",
    "title_freq",
    "ner_per_doc",
    "title_per_doc",
    "title_per_ner",
    "log1p_ner_freq",
    "log1p_doc_freq",
    "log1p_title_freq",
];

/// Counting features of a candidate plus their ratios and log1p transforms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RankFeatures<T> {
    pub ner_freq: T,
    pub doc_freq: T,
    pub title_freq: T,
    pub ner_per_doc: T,
    pub title_per_doc: T,
    pub title_per_ner: T,
    pub log1p_ner_freq: T,
    pub log1p_doc_freq: T,
    pub log1p_title_freq: T,
}

impl<T: Scalar> RankFeatures<T> {
    /// From raw counters; `ner >= doc >= 1` is assumed.
    pub fn from_counts(ner: u64, doc: u64, title: u64) -> Self {
        let (n, d, t) = (T::of(ner as f64), T::of(doc as f64), T::of(title as f64));
        let safe_d = d.max(T::one());
        let safe_n = n.max(T::one());
        RankFeatures {
            ner_freq: n,
            doc_freq: d,
            title_freq: t,
            ner_per_doc: n / safe_d,
            title_per_doc: t / safe_d,
            title_per_ner: t / safe_n,
            log1p_ner_freq: n.ln_1p(),
            log1p_doc_freq: d.ln_1p(),
            log1p_title_freq: t.ln_1p(),
        }
    }

    pub fn to_array(&self) -> [T; N_FEATURES] {
        [
            self.ner_freq,
            self.doc_freq,
            self.title_freq,
            self.ner_per_doc,
            self.title_per_doc,
            self.title_per_ner,
            self.log1p_ner_freq,
            self.log1p_doc_freq,
            self.log1p_title_freq,
        ]
    }
}

pub fn compute_features<T: Scalar>(candidate: &TopicCandidate) -> RankFeatures<T> {
    RankFeatures::from_counts(
        candidate.ner_frequency,
        candidate.document_frequency,
        candidate.title_frequency,
    )
}
