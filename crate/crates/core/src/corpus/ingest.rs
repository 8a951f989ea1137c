use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Serialize;

use super::{CorpusError, Document};

/// A line of the corpus file that could not be turned into a [`Document`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineError {
    /// 1-based line number.
    pub line: usize,
    pub reason: String,
}

/// Streaming reader over a JSONL corpus: one `Result` per non-blank line.
pub struct JsonlDocuments<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> JsonlDocuments<R> {
    pub fn new(reader: R) -> Self {
        JsonlDocuments {
            lines: reader.lines(),
            line_no: 0,
        }
    }
}

impl<R: BufRead> Iterator for JsonlDocuments<R> {
    type Item = Result<Document, LineError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = self.lines.next()?;
            self.line_no += 1;
            let line = match line {
                Ok(l) => l,
                Err(e) => {
                    return Some(Err(LineError {
                        line: self.line_no,
                        reason: format!("unreadable line: {e}"),
                    }))
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            return Some(serde_json::from_str::<Document>(&line).map_err(|e| LineError {
                line: self.line_no,
                reason: e.to_string(),
            }));
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Ingested {
    /// Documents in file order; a repeated `doc_id` replaces the earlier
    /// record in place.
    pub documents: Vec<Document>,
    pub errors: Vec<LineError>,
}

/// Collects a document stream, applying `doc_id` supersession.
pub fn read_documents<R: BufRead>(reader: R) -> Ingested {
    let mut out = Ingested::default();
    let mut slot: HashMap<String, usize> = HashMap::new();
    for item in JsonlDocuments::new(reader) {
        match item {
            Ok(doc) => match slot.get(&doc.doc_id) {
                Some(&i) => out.documents[i] = doc,
                None => {
                    slot.insert(doc.doc_id.clone(), out.documents.len());
                    out.documents.push(doc);
                }
            },
            Err(e) => out.errors.push(e),
        }
    }
    out
}

pub fn ingest_jsonl(path: impl AsRef<Path>) -> Result<Ingested, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })?;
    Ok(read_documents(BufReader::new(file)))
}
