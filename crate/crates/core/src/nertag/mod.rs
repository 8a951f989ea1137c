//! Named entity tagging under the BIO scheme.
//!
//! A [`TokenScorer`] produces a [`ScoreMatrix`] of per-token label scores,
//! [`viterbi_decode`] picks the best BIO-valid path, and
//! [`extract_mentions`] turns the path into [`Mention`]s. The in-crate scorer
//! is [`TaggerModel`], a hashed-feature softmax classifier trained with focal
//! loss; [`ExternalScores`] lets scores come from a file instead.

mod augment;
mod decode;
mod external;
mod features;
mod focal;
mod labels;
mod mention;
mod scores;
mod tagger;

use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use augment::{augment, AugmentMode, EntityBank};
pub use decode::{greedy_decode, path_score, viterbi_decode};
pub use external::{ExternalScores, ScoreRecord};
pub use features::{feature_strings, featurize, word_shape, SENTENCE_END, SENTENCE_START};
pub use focal::{focal_loss, log_softmax, softmax, FocalLoss, PROB_FLOOR};
pub use labels::{is_valid_bio, Label, LabelSet, DEFAULT_ENTITY_TYPES};
pub use mention::{extract_mentions, Mention};
pub use scores::ScoreMatrix;
pub use tagger::{train_tagger, TaggerConfig, TaggerModel};

use crate::corpus::{Sentence, Token};
use crate::Scalar;

#[derive(Debug, Error)]
pub enum NerError {
    #[error("training data is empty")]
    EmptyTrainingData,
    #[error("sentence {sentence}: label sequence is not valid BIO")]
    InvalidBio { sentence: usize },
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
    #[error("entity bank has no entries for type {0:?}")]
    MissingBankType(String),
    #[error("focal gamma must be finite and >= 0, got {0}")]
    InvalidGamma(f64),
    #[error("probabilities sum to {0}, expected 1")]
    NotNormalized(f64),
    #[error("non-finite score at row {row}, column {col}")]
    NonFiniteScore { row: usize, col: usize },
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

/// Gold-labeled training sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSentence {
    pub tokens: Vec<String>,
    pub labels: Vec<Label>,
    pub from_title: bool,
}

/// Anything that can score a tokenized sentence against a label set.
pub trait TokenScorer<T: Scalar>: Send + Sync {
    fn label_set(&self) -> &LabelSet;

    /// `None` means the scorer has nothing for this sentence; it is skipped.
    fn score(&self, sentence: &Sentence, tokens: &[Token]) -> Result<Option<ScoreMatrix<T>>, NerError>;
}

impl<T: Scalar> TokenScorer<T> for TaggerModel<T> {
    fn label_set(&self) -> &LabelSet {
        self.labels()
    }

    fn score(&self, sentence: &Sentence, tokens: &[Token]) -> Result<Option<ScoreMatrix<T>>, NerError> {
        let surfaces: Vec<&str> = tokens.iter().map(|t| t.surface.as_str()).collect();
        Ok(Some(self.score_tokens(&surfaces, sentence.from_title)))
    }
}

#[derive(Serialize, Deserialize)]
struct LabeledLine {
    tokens: Vec<String>,
    labels: Vec<String>,
    #[serde(default)]
    from_title: bool,
}

/// Reads `{"tokens": [...], "labels": ["B-person", ...]}` lines.
pub fn read_labeled_jsonl<R: BufRead>(reader: R, labels: &LabelSet) -> Result<Vec<LabeledSentence>, NerError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| NerError::Format(format!("line {}: {e}", i + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: LabeledLine =
            serde_json::from_str(&line).map_err(|e| NerError::Format(format!("line {}: {e}", i + 1)))?;
        if raw.tokens.len() != raw.labels.len() {
            return Err(NerError::LengthMismatch {
                expected: raw.tokens.len(),
                got: raw.labels.len(),
            });
        }
        let parsed = raw
            .labels
            .iter()
            .map(|l| labels.parse(l))
            .collect::<Result<Vec<_>, _>>()?;
        if !is_valid_bio(&parsed) {
            return Err(NerError::InvalidBio { sentence: out.len() });
        }
        out.push(LabeledSentence {
            tokens: raw.tokens,
            labels: parsed,
            from_title: raw.from_title,
        });
    }
    Ok(out)
}

pub fn read_labeled_file(path: impl AsRef<Path>, labels: &LabelSet) -> Result<Vec<LabeledSentence>, NerError> {
    let file = std::fs::File::open(path.as_ref()).map_err(|source| NerError::Io {
        path: path.as_ref().display().to_string(),
        source,
    })?;
    read_labeled_jsonl(std::io::BufReader::new(file), labels)
}

pub fn write_labeled_jsonl<W: Write>(
    mut writer: W,
    data: &[LabeledSentence],
    labels: &LabelSet,
) -> std::io::Result<()> {
    for s in data {
        let line = LabeledLine {
            tokens: s.tokens.clone(),
            labels: s.labels.iter().map(|&l| labels.name(l)).collect(),
            from_title: s.from_title,
        };
        serde_json::to_writer(&mut writer, &line)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
