//! Definition mining.
//!
//! A document is split into sentences; each sentence is classified into one
//! of five [`DefinitionCategory`] values, and only `Sufficient` ones go on to
//! pattern-based topic extraction and the opinion filter.

mod classify;
mod lexicon;
mod patterns;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use classify::{
    classify_by_rules, classify_sentence, read_category_csv, read_category_file, train_sentence_classifier,
    DefinitionCategory, LinearClassifier, LinearConfig, SentenceClassifier,
};
pub use lexicon::{opinion_filter, OpinionLexicon, OpinionVerdict};
pub use patterns::{
    default_patterns, extract_topic, load_patterns, DefinitionPattern, Extraction, PatternSpec, DEFAULT_TEMPLATES,
};

use crate::corpus::{split_sentences, Document, Sentence};
use crate::topicrank::normalize_key;
use crate::Scalar;

#[derive(Debug, Error)]
pub enum DefError {
    #[error("invalid pattern {0}")]
    BadPattern(String),
    #[error("unknown definition category {0:?}")]
    UnknownCategory(String),
    #[error("no training rows")]
    EmptyTrainingData,
    #[error("at least two categories must be present")]
    SingleClass,
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
pub struct DefinitionRecord {
    pub topic_key: String,
    pub topic_surface: String,
    pub description: String,
    pub sentence: String,
    pub doc_id: String,
    pub sentence_index: usize,
    pub category: DefinitionCategory,
    pub pattern_id: usize,
    pub confidence: f64,
}

/// Classify, keep `Sufficient`, extract, then drop negative opinions.
pub fn mine_sentences<T: Scalar>(
    sentences: &[Sentence],
    classifier: &SentenceClassifier<T>,
    patterns: &[DefinitionPattern],
    lexicon: &OpinionLexicon,
) -> Vec<DefinitionRecord> {
    let mut out = Vec::new();
    for s in sentences {
        let (category, confidence) = classify_sentence(classifier, &s.text);
        if category != DefinitionCategory::Sufficient {
            continue;
        }
        let Some(ex) = extract_topic(&s.text, patterns) else {
            continue;
        };
        if opinion_filter(&s.text, lexicon) != OpinionVerdict::Keep {
            continue;
        }
        let Ok(topic_key) = normalize_key(&ex.topic) else {
            continue;
        };
        out.push(DefinitionRecord {
            topic_key,
            topic_surface: ex.topic,
            description: ex.description,
            sentence: s.text.clone(),
            doc_id: s.doc_id.clone(),
            sentence_index: s.index,
            category,
            pattern_id: ex.pattern_id,
            confidence,
        });
    }
    out
}

pub fn mine_definitions<T: Scalar>(
    doc: &Document,
    classifier: &SentenceClassifier<T>,
    patterns: &[DefinitionPattern],
    lexicon: &OpinionLexicon,
) -> Vec<DefinitionRecord> {
    mine_sentences(&split_sentences(doc), classifier, patterns, lexicon)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinaryMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl BinaryMetrics {
    /// Zero denominators give 0.
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        BinaryMetrics {
            precision,
            recall,
            f1,
            tp,
            fp,
            fn_,
        }
    }

    pub fn from_predictions(predicted: &[bool], gold: &[bool]) -> Result<Self, DefError> {
        if predicted.len() != gold.len() {
            return Err(DefError::Format(format!(
                "{} predictions but {} labels",
                predicted.len(),
                gold.len()
            )));
        }
        if gold.iter().all(|&g| g) || gold.iter().all(|&g| !g) {
            return Err(DefError::SingleClass);
        }
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for (&p, &g) in predicted.iter().zip(gold) {
            match (p, g) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        Ok(Self::from_counts(tp, fp, fn_))
    }
}

/// Sufficient-vs-other evaluation of any classifier.
pub fn eval_classifier<T: Scalar>(
    classifier: &SentenceClassifier<T>,
    rows: &[(String, bool)],
) -> Result<BinaryMetrics, DefError> {
    let predicted: Vec<bool> = rows
        .iter()
        .map(|(t, _)| classify_sentence(classifier, t).0 == DefinitionCategory::Sufficient)
        .collect();
    let gold: Vec<bool> = rows.iter().map(|(_, g)| *g).collect();
    BinaryMetrics::from_predictions(&predicted, &gold)
}

/// The rule-based classifier with the default patterns.
pub fn eval_rule_baseline(rows: &[(String, bool)]) -> Result<BinaryMetrics, DefError> {
    eval_classifier(&SentenceClassifier::<f64>::rule(default_patterns()), rows)
}
