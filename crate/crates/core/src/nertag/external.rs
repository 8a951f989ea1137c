use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{LabelSet, NerError, ScoreMatrix, TokenScorer};
use crate::corpus::{Sentence, Token};
use crate::Scalar;

/// One line of an external score file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub doc_id: String,
    pub sentence_index: usize,
    /// Column names, in the order used by `scores` rows.
    pub labels: Vec<String>,
    pub scores: Vec<Vec<f64>>,
}

/// Scores produced outside this crate, keyed by `(doc_id, sentence_index)`
/// and reordered into the label set's ordinals.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalScores<T> {
    labels: LabelSet,
    by_sentence: HashMap<(String, usize), ScoreMatrix<T>>,
}

impl<T: Scalar> ExternalScores<T> {
    pub fn from_records<I>(records: I, labels: &LabelSet) -> Result<Self, NerError>
    where
        I: IntoIterator<Item = ScoreRecord>,
    {
        let mut by_sentence = HashMap::new();
        for rec in records {
            let m = Self::reorder(&rec, labels)?;
            by_sentence.insert((rec.doc_id, rec.sentence_index), m);
        }
        Ok(ExternalScores {
            labels: labels.clone(),
            by_sentence,
        })
    }

    fn reorder(rec: &ScoreRecord, labels: &LabelSet) -> Result<ScoreMatrix<T>, NerError> {
        if rec.labels.len() != labels.len() {
            return Err(NerError::Format(format!(
                "{}#{}: expected {} label columns, found {}",
                rec.doc_id,
                rec.sentence_index,
                labels.len(),
                rec.labels.len()
            )));
        }
        // column in the record for each ordinal
        let mut source = vec![usize::MAX; labels.len()];
        for (col, name) in rec.labels.iter().enumerate() {
            let ord = labels.ordinal(labels.parse(name)?);
            if source[ord] != usize::MAX {
                return Err(NerError::Format(format!("duplicate label column {name}")));
            }
            source[ord] = col;
        }
        let mut data = Vec::with_capacity(rec.scores.len() * labels.len());
        for row in &rec.scores {
            if row.len() != labels.len() {
                return Err(NerError::LengthMismatch {
                    expected: labels.len(),
                    got: row.len(),
                });
            }
            data.extend(source.iter().map(|&c| T::of(row[c])));
        }
        ScoreMatrix::new(rec.scores.len(), labels.len(), data)
    }

    pub fn from_reader<R: BufRead>(reader: R, labels: &LabelSet) -> Result<Self, NerError> {
        let mut records = Vec::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| NerError::Format(format!("line {}: {e}", i + 1)))?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(
                serde_json::from_str::<ScoreRecord>(&line)
                    .map_err(|e| NerError::Format(format!("line {}: {e}", i + 1)))?,
            );
        }
        Self::from_records(records, labels)
    }

    pub fn from_jsonl_file(path: impl AsRef<Path>, labels: &LabelSet) -> Result<Self, NerError> {
        let file = std::fs::File::open(path.as_ref()).map_err(|source| NerError::Io {
            path: path.as_ref().display().to_string(),
            source,
        })?;
        Self::from_reader(std::io::BufReader::new(file), labels)
    }

    pub fn len(&self) -> usize {
        self.by_sentence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_sentence.is_empty()
    }
}

impl<T: Scalar> TokenScorer<T> for ExternalScores<T> {
    fn label_set(&self) -> &LabelSet {
        &self.labels
    }

    fn score(&self, sentence: &Sentence, tokens: &[Token]) -> Result<Option<ScoreMatrix<T>>, NerError> {
        match self.by_sentence.get(&(sentence.doc_id.clone(), sentence.index)) {
            None => Ok(None),
            Some(m) if m.rows() != tokens.len() => Err(NerError::LengthMismatch {
                expected: tokens.len(),
                got: m.rows(),
            }),
            Some(m) => Ok(Some(m.clone())),
        }
    }
}
