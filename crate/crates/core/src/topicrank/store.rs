use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::RankError;
use crate::nertag::Mention;

/// Case-folds, collapses whitespace, strips leading and trailing punctuation.
pub fn normalize_key(surface: &str) -> Result<String, RankError> {
    let collapsed = surface
        .split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase();
    let key = collapsed
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_string();
    if key.is_empty() {
        Err(RankError::EmptyKey(surface.to_string()))
    } else {
        Ok(key)
    }
}

/// A topic aggregated over every document that mentions it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicCandidate {
    /// Normalized surface.
    pub key: String,
    /// Majority entity type (ties go to the lexicographically smallest).
    pub entity_type: String,
    /// Most frequent original surface (ties go to the smallest).
    pub display_name: String,
    pub ner_frequency: u64,
    pub document_frequency: u64,
    pub title_frequency: u64,
    pub doc_ids: BTreeSet<String>,
    pub type_histogram: BTreeMap<String, u64>,
    pub surface_histogram: BTreeMap<String, u64>,
}

fn majority(hist: &BTreeMap<String, u64>) -> String {
    // BTreeMap iterates in key order, so the first maximum is the smallest key
    let mut best: Option<(&String, u64)> = None;
    for (k, &v) in hist {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((k, v));
        }
    }
    best.map(|(k, _)| k.clone()).unwrap_or_default()
}

impl TopicCandidate {
    fn empty(key: &str) -> Self {
        TopicCandidate {
            key: key.to_string(),
            entity_type: String::new(),
            display_name: String::new(),
            ner_frequency: 0,
            document_frequency: 0,
            title_frequency: 0,
            doc_ids: BTreeSet::new(),
            type_histogram: BTreeMap::new(),
            surface_histogram: BTreeMap::new(),
        }
    }

    fn refresh_derived(&mut self) {
        self.entity_type = majority(&self.type_histogram);
        self.display_name = majority(&self.surface_histogram);
    }
}

/// What one document contributed to one key.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyContribution {
    pub count: u64,
    pub title_count: u64,
    pub types: BTreeMap<String, u64>,
    pub surfaces: BTreeMap<String, u64>,
}

/// Per-document ledger entry, kept so a document can be removed exactly.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocContribution {
    pub keys: BTreeMap<String, KeyContribution>,
    /// Mentions whose surface normalized to nothing.
    pub rejected: u64,
}

impl DocContribution {
    pub fn from_mentions(doc_id: &str, mentions: &[Mention]) -> Result<Self, RankError> {
        let mut out = DocContribution::default();
        for m in mentions {
            if m.doc_id != doc_id {
                return Err(RankError::ForeignMention {
                    doc_id: doc_id.to_string(),
                    mention_doc: m.doc_id.clone(),
                });
            }
            let Ok(key) = normalize_key(&m.surface) else {
                out.rejected += 1;
                continue;
            };
            let c = out.keys.entry(key).or_default();
            c.count += 1;
            c.title_count += u64::from(m.from_title);
            *c.types.entry(m.entity_type.clone()).or_default() += 1;
            *c.surfaces.entry(m.surface.clone()).or_default() += 1;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Accumulated {
    Applied,
    /// The document was already in the store; nothing changed.
    AlreadySeen,
}

/// Topic candidate store with a per-document contribution ledger.
///
/// Counters are sums over the ledger, so accumulation order never matters
/// and removing a document restores the exact prior state.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateStore {
    candidates: BTreeMap<String, TopicCandidate>,
    ledger: BTreeMap<String, DocContribution>,
}

fn add_hist(into: &mut BTreeMap<String, u64>, from: &BTreeMap<String, u64>) {
    for (k, v) in from {
        *into.entry(k.clone()).or_default() += v;
    }
}

fn sub_hist(into: &mut BTreeMap<String, u64>, from: &BTreeMap<String, u64>) {
    for (k, v) in from {
        if let Some(e) = into.get_mut(k) {
            *e = e.saturating_sub(*v);
            if *e == 0 {
                into.remove(k);
            }
        }
    }
}

impl CandidateStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&TopicCandidate> {
        self.candidates.get(key)
    }

    /// Candidates in key order.
    pub fn candidates(&self) -> impl Iterator<Item = &TopicCandidate> {
        self.candidates.values()
    }

    pub fn contains_document(&self, doc_id: &str) -> bool {
        self.ledger.contains_key(doc_id)
    }

    pub fn contribution(&self, doc_id: &str) -> Option<&DocContribution> {
        self.ledger.get(doc_id)
    }

    pub fn documents(&self) -> impl Iterator<Item = &String> {
        self.ledger.keys()
    }

    /// Adds one document's mentions. A document already in the store is a
    /// no-op.
    pub fn accumulate(&mut self, doc_id: &str, mentions: &[Mention]) -> Result<Accumulated, RankError> {
        if self.ledger.contains_key(doc_id) {
            return Ok(Accumulated::AlreadySeen);
        }
        let contribution = DocContribution::from_mentions(doc_id, mentions)?;
        self.apply(doc_id, contribution);
        Ok(Accumulated::Applied)
    }

    fn apply(&mut self, doc_id: &str, contribution: DocContribution) {
        for (key, c) in &contribution.keys {
            let cand = self
                .candidates
                .entry(key.clone())
                .or_insert_with(|| TopicCandidate::empty(key));
            cand.ner_frequency += c.count;
            cand.title_frequency += c.title_count;
            if cand.doc_ids.insert(doc_id.to_string()) {
                cand.document_frequency += 1;
            }
            add_hist(&mut cand.type_histogram, &c.types);
            add_hist(&mut cand.surface_histogram, &c.surfaces);
            cand.refresh_derived();
        }
        self.ledger.insert(doc_id.to_string(), contribution);
    }

    /// Subtracts a document's recorded contribution. Candidates whose NER
    /// frequency reaches zero are dropped. Returns false for unknown ids.
    pub fn remove_document(&mut self, doc_id: &str) -> bool {
        let Some(contribution) = self.ledger.remove(doc_id) else {
            return false;
        };
        for (key, c) in &contribution.keys {
            let Some(cand) = self.candidates.get_mut(key) else {
                continue;
            };
            cand.ner_frequency = cand.ner_frequency.saturating_sub(c.count);
            cand.title_frequency = cand.title_frequency.saturating_sub(c.title_count);
            if cand.doc_ids.remove(doc_id) {
                cand.document_frequency = cand.document_frequency.saturating_sub(1);
            }
            sub_hist(&mut cand.type_histogram, &c.types);
            sub_hist(&mut cand.surface_histogram, &c.surfaces);
            if cand.ner_frequency == 0 {
                self.candidates.remove(key);
            } else {
                cand.refresh_derived();
            }
        }
        true
    }

    /// Folds another store in. Both must cover disjoint documents.
    pub fn merge(&mut self, other: CandidateStore) -> Result<(), RankError> {
        if let Some(d) = other.ledger.keys().find(|d| self.ledger.contains_key(*d)) {
            return Err(RankError::DuplicateDocument(d.clone()));
        }
        for (doc_id, c) in other.ledger {
            self.apply(&doc_id, c);
        }
        Ok(())
    }

    /// One candidate per line, in key order.
    pub fn write_snapshot<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for c in self.candidates.values() {
            serde_json::to_writer(&mut w, c)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub fn read_snapshot<R: BufRead>(reader: R) -> Result<Vec<TopicCandidate>, RankError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| RankError::Format(format!("line {}: {e}", i + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| RankError::Format(format!("line {}: {e}", i + 1)))?,
        );
    }
    Ok(out)
}

/// Top `n` keys by NER frequency, ties broken by key.
pub fn shortlist(store: &CandidateStore, n: usize) -> Vec<String> {
    let mut all: Vec<&TopicCandidate> = store.candidates().collect();
    all.sort_by(|a, b| b.ner_frequency.cmp(&a.ner_frequency).then_with(|| a.key.cmp(&b.key)));
    all.into_iter().take(n).map(|c| c.key.clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Span;

    fn mention(doc: &str, surface: &str, ty: &str, title: bool) -> Mention {
        Mention {
            doc_id: doc.into(),
            sentence_index: 0,
            from_title: title,
            token_span: Span::new(0, 1),
            char_span: Span::new(0, surface.len()),
            surface: surface.into(),
            entity_type: ty.into(),
            score: 0.0,
        }
    }

    #[test]
    fn normalization() {
        assert_eq!(normalize_key("  Knowledge Hub. ").unwrap(), "knowledge hub");
        assert_eq!(normalize_key("NLP").unwrap(), "nlp");
        assert_eq!(normalize_key("Knowledge\n  Hub").unwrap(), "knowledge hub");
        assert!(matches!(normalize_key("..."), Err(RankError::EmptyKey(_))));
    }

    #[test]
    fn counts_one_document() {
        let mut store = CandidateStore::new();
        let ms = [
            mention("d1", "Contoso", "organization", true),
            mention("d1", "Contoso", "organization", false),
            mention("d1", "contoso", "product", false),
        ];
        store.accumulate("d1", &ms).unwrap();
        let c = store.get("contoso").unwrap();
        assert_eq!((c.ner_frequency, c.document_frequency, c.title_frequency), (3, 1, 1));
        assert_eq!(c.display_name, "Contoso");
        assert_eq!(c.entity_type, "organization");
    }

    #[test]
    fn second_accumulation_is_noop() {
        let mut store = CandidateStore::new();
        let ms = [mention("d1", "Contoso", "organization", false)];
        assert_eq!(store.accumulate("d1", &ms).unwrap(), Accumulated::Applied);
        let before = store.clone();
        assert_eq!(store.accumulate("d1", &ms).unwrap(), Accumulated::AlreadySeen);
        assert_eq!(store, before);
    }

    #[test]
    fn order_independent() {
        let d1 = [mention("d1", "Contoso", "organization", false)];
        let d2 = [mention("d2", "contoso", "organization", true), mention("d2", "Falcon", "project", false)];
        let mut a = CandidateStore::new();
        a.accumulate("d1", &d1).unwrap();
        a.accumulate("d2", &d2).unwrap();
        let mut b = CandidateStore::new();
        b.accumulate("d2", &d2).unwrap();
        b.accumulate("d1", &d1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn foreign_mentions_rejected() {
        let mut store = CandidateStore::new();
        assert!(store.accumulate("d1", &[mention("d2", "X", "person", false)]).is_err());
    }

    #[test]
    fn unnormalizable_surfaces_are_counted_not_stored() {
        let mut store = CandidateStore::new();
        store.accumulate("d1", &[mention("d1", "--", "person", false)]).unwrap();
        assert!(store.is_empty());
        assert_eq!(store.contribution("d1").unwrap().rejected, 1);
    }

    #[test]
    fn removal_restores_prior_state() {
        let mut store = CandidateStore::new();
        store.accumulate("d1", &[mention("d1", "Contoso", "organization", false)]).unwrap();
        let before = store.clone();
        store.accumulate("d2", &[mention("d2", "CONTOSO", "product", true)]).unwrap();
        assert!(store.remove_document("d2"));
        assert_eq!(store, before);
        assert!(store.remove_document("d1"));
        assert!(store.is_empty());
        assert!(!store.remove_document("d1"));
    }

    #[test]
    fn shortlist_orders_by_frequency_then_key() {
        let mut store = CandidateStore::new();
        let mut ms = Vec::new();
        for (s, n) in [("a", 5), ("b", 2), ("c", 9)] {
            ms.extend((0..n).map(|_| mention("d", s, "person", false)));
        }
        store.accumulate("d", &ms).unwrap();
        assert_eq!(shortlist(&store, 2), ["c", "a"]);
        assert_eq!(shortlist(&store, 10).len(), 3);

        let mut tied = CandidateStore::new();
        let ms: Vec<_> = ["zeta", "alpha"]
            .iter()
            .flat_map(|s| (0..4).map(move |_| mention("d", s, "person", false)))
            .collect();
        tied.accumulate("d", &ms).unwrap();
        assert_eq!(shortlist(&tied, 2), ["alpha", "zeta"]);
    }

    #[test]
    fn snapshot_round_trip() {
        let mut store = CandidateStore::new();
        store.accumulate("d1", &[mention("d1", "Contoso", "organization", false)]).unwrap();
        let mut buf = Vec::new();
        store.write_snapshot(&mut buf).unwrap();
        let back = read_snapshot(buf.as_slice()).unwrap();
        assert_eq!(back, store.candidates().cloned().collect::<Vec<_>>());
    }
}
