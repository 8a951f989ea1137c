use std::collections::HashSet;
use std::path::Path;

use super::{CorpusError, Document, Sentence, Span};

pub const DEFAULT_ABBREVIATIONS: &[&str] = &[
    "Dr", "Mr", "Mrs", "Ms", "Prof", "Inc", "Corp", "etc", "e.g", "i.e", "vs",
];

/// Words that, followed by a period, do not end a sentence. Matching is
/// case-insensitive; a single uppercase letter (an initial) always matches.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Abbreviations {
    entries: HashSet<String>,
}

impl Default for Abbreviations {
    fn default() -> Self {
        Self::new(DEFAULT_ABBREVIATIONS.iter().copied())
    }
}

impl Abbreviations {
    pub fn new<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Abbreviations {
            entries: entries
                .into_iter()
                .map(|s| s.as_ref().trim().trim_end_matches('.').to_lowercase())
                .filter(|s| !s.is_empty())
                .collect(),
        }
    }

    /// One entry per line; blank lines ignored.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Ok(Self::new(text.lines()))
    }

    pub fn matches(&self, word: &str) -> bool {
        let mut chars = word.chars();
        if let (Some(c), None) = (chars.next(), chars.next()) {
            if c.is_uppercase() {
                return true;
            }
        }
        self.entries.contains(&word.to_lowercase())
    }
}

fn is_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '}' | '\u{201d}' | '\u{2019}')
}

/// Splits with the default abbreviation list.
pub fn split_sentences(doc: &Document) -> Vec<Sentence> {
    split_sentences_with(doc, &Abbreviations::default())
}

/// Title (if non-blank) becomes sentence 0 with `from_title`; body sentences
/// follow in order. Terminators are `.`, `!`, `?` followed by whitespace or end
/// of text, and blank lines.
pub fn split_sentences_with(doc: &Document, abbreviations: &Abbreviations) -> Vec<Sentence> {
    let mut out = Vec::new();
    let title = doc.title.trim();
    if !title.is_empty() {
        let start = doc.title.len() - doc.title.trim_start().len();
        out.push(Sentence {
            doc_id: doc.doc_id.clone(),
            index: 0,
            char_span: Span::new(start, start + title.len()),
            text: title.to_string(),
            from_title: true,
        });
    }
    for span in body_spans(&doc.body, abbreviations) {
        out.push(Sentence {
            doc_id: doc.doc_id.clone(),
            index: out.len(),
            char_span: span,
            text: doc.body[span.range()].to_string(),
            from_title: false,
        });
    }
    out
}

fn body_spans(body: &str, abbreviations: &Abbreviations) -> Vec<Span> {
    let chars: Vec<(usize, char)> = body.char_indices().collect();
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    // byte end of the last non-whitespace char seen in the open sentence
    let mut last_end = 0usize;
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c == '\n' {
            let mut j = i + 1;
            while j < chars.len() && chars[j].1 != '\n' && chars[j].1.is_whitespace() {
                j += 1;
            }
            if j < chars.len() && chars[j].1 == '\n' {
                if let Some(s) = start.take() {
                    spans.push(Span::new(s, last_end));
                }
                i = j + 1;
                continue;
            }
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if start.is_none() {
            start = Some(pos);
        }
        last_end = pos + c.len_utf8();
        if is_terminator(c) {
            let mut j = i + 1;
            while j < chars.len() && (is_terminator(chars[j].1) || is_closer(chars[j].1)) {
                j += 1;
            }
            let at_boundary = j == chars.len() || chars[j].1.is_whitespace();
            let lone_period = c == '.' && !chars[i + 1..j].iter().any(|&(_, c)| is_terminator(c));
            let abbreviated = lone_period && abbreviations.matches(preceding_word(body, pos));
            if at_boundary && !abbreviated {
                let end = if j == chars.len() { body.len() } else { chars[j].0 };
                spans.push(Span::new(start.take().unwrap_or(pos), end));
                i = j;
                continue;
            }
            if j > i + 1 {
                last_end = if j == chars.len() { body.len() } else { chars[j].0 };
                i = j;
                continue;
            }
        }
        i += 1;
    }
    if let Some(s) = start {
        spans.push(Span::new(s, last_end));
    }
    spans
}

// The whitespace-delimited word ending at byte `pos`, without leading
// punctuation such as an opening parenthesis.
fn preceding_word(body: &str, pos: usize) -> &str {
    let head = &body[..pos];
    let from = head
        .char_indices()
        .rev()
        .find(|(_, c)| c.is_whitespace())
        .map(|(i, c)| i + c.len_utf8())
        .unwrap_or(0);
    head[from..].trim_start_matches(|c: char| !c.is_alphanumeric())
}
