//! Corpus units: documents, sentences and tokens with stable spans.
//!
//! Spans are half-open byte ranges that always fall on UTF-8 character
//! boundaries, so `&text[span.range()]` is the covered text.

mod ingest;
mod split;
mod tokenize;

use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ingest::{ingest_jsonl, read_documents, Ingested, JsonlDocuments, LineError};
pub use split::{split_sentences, split_sentences_with, Abbreviations, DEFAULT_ABBREVIATIONS};
pub use tokenize::tokenize;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Half-open byte range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Span { start, end }
    }

    pub fn range(self) -> Range<usize> {
        self.start..self.end
    }

    pub fn len(self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(self) -> bool {
        self.start == self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub title: String,
    pub body: String,
    pub author_id: String,
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: u64,
    #[serde(default)]
    pub deleted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub doc_id: String,
    pub index: usize,
    /// Span into the title when `from_title` is set, otherwise into the body.
    pub char_span: Span,
    pub text: String,
    pub from_title: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub sentence_index: usize,
    pub word_index: usize,
    /// Span into the owning sentence's text.
    pub char_span: Span,
    pub surface: String,
}
