use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{PipelineConfig, PipelineError};
use crate::cardbuild::extract_acronym_aliases;
use crate::corpus::{split_sentences_with, tokenize, Abbreviations, Document};
use crate::defmine::{
    default_patterns, load_patterns, mine_sentences, DefinitionPattern, DefinitionRecord, OpinionLexicon,
    SentenceClassifier,
};
use crate::nertag::{
    extract_mentions, viterbi_decode, ExternalScores, LabelSet, Mention, NerError, ScoreMatrix, TaggerModel,
    TokenScorer,
};
use crate::topicrank::{rerank_and_filter, shortlist, CandidateStore, GbdtModel, RankedTopic, RankedTopicList};

/// Trained tagger or precomputed scores.
pub enum Scorer {
    Tagger(TaggerModel<f64>),
    External(ExternalScores<f64>),
}

impl TokenScorer<f64> for Scorer {
    fn label_set(&self) -> &LabelSet {
        match self {
            Scorer::Tagger(m) => m.label_set(),
            Scorer::External(e) => e.label_set(),
        }
    }

    fn score(
        &self,
        sentence: &crate::corpus::Sentence,
        tokens: &[crate::corpus::Token],
    ) -> Result<Option<ScoreMatrix<f64>>, NerError> {
        match self {
            Scorer::Tagger(m) => m.score(sentence, tokens),
            Scorer::External(e) => e.score(sentence, tokens),
        }
    }
}

/// Immutable components shared by every document.
pub struct Models {
    pub scorer: Scorer,
    pub ranker: Option<GbdtModel<f64>>,
    pub classifier: SentenceClassifier<f64>,
    pub patterns: Vec<DefinitionPattern>,
    pub lexicon: OpinionLexicon,
    pub abbreviations: Abbreviations,
}

impl Models {
    /// Rule classifier, default patterns, bundled lexicon.
    pub fn with_scorer(scorer: Scorer) -> Self {
        let patterns = default_patterns();
        Models {
            scorer,
            ranker: None,
            classifier: SentenceClassifier::rule(patterns.clone()),
            patterns,
            lexicon: OpinionLexicon::default(),
            abbreviations: Abbreviations::default(),
        }
    }

    pub fn load(config: &PipelineConfig) -> Result<Self, PipelineError> {
        let stage = |s: &'static str| move |e: Box<dyn std::error::Error + Send + Sync>| PipelineError::stage(s, e);
        let scorer = match (&config.tagger_model, &config.tagger_scores) {
            (Some(p), None) => Scorer::Tagger(TaggerModel::load_json(p).map_err(|e| stage("load tagger")(e.into()))?),
            (None, Some(p)) => {
                let labels = LabelSet::new(&config.entity_types).map_err(|e| PipelineError::Config(e.to_string()))?;
                Scorer::External(
                    ExternalScores::from_jsonl_file(p, &labels).map_err(|e| stage("load tagger scores")(e.into()))?,
                )
            }
            _ => return Err(PipelineError::Config("set exactly one of tagger_model and tagger_scores".into())),
        };
        let mut models = Models::with_scorer(scorer);
        if let Some(p) = &config.ranker_model {
            models.ranker = Some(GbdtModel::load_json(p).map_err(|e| stage("load ranker")(e.into()))?);
        }
        if let Some(p) = &config.patterns {
            models.patterns = load_patterns(p).map_err(|e| stage("load patterns")(e.into()))?;
        }
        models.classifier = match &config.def_classifier {
            Some(p) => SentenceClassifier::load_json(p).map_err(|e| stage("load classifier")(e.into()))?,
            None => SentenceClassifier::rule(models.patterns.clone()),
        };
        if let Some(neg) = &config.negative_lexicon {
            models.lexicon = OpinionLexicon::from_files(neg, config.positive_lexicon.as_deref())
                .map_err(|e| stage("load lexicon")(e.into()))?;
        }
        if let Some(p) = &config.abbreviations {
            models.abbreviations = Abbreviations::from_file(p).map_err(|e| stage("load abbreviations")(e.into()))?;
        }
        Ok(models)
    }
}

/// Everything one document contributes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedDoc {
    pub mentions: Vec<Mention>,
    pub definitions: Vec<DefinitionRecord>,
    pub length: u64,
    pub acronyms: Vec<(String, String)>,
}

/// Split, score, decode, extract mentions; mine definitions on the same
/// sentences.
pub fn process_document(doc: &Document, models: &Models) -> Result<ProcessedDoc, NerError> {
    let sentences = split_sentences_with(doc, &models.abbreviations);
    let labels = models.scorer.label_set();
    let mut mentions = Vec::new();
    let mut length = 0u64;
    for s in &sentences {
        let tokens = tokenize(s);
        length += tokens.len() as u64;
        if tokens.is_empty() {
            continue;
        }
        let Some(scores) = models.scorer.score(s, &tokens)? else {
            continue;
        };
        let path = viterbi_decode(&scores, labels);
        mentions.extend(extract_mentions(s, &tokens, &path, labels, Some(&scores))?);
    }
    let definitions = mine_sentences(&sentences, &models.classifier, &models.patterns, &models.lexicon);
    let acronyms = extract_acronym_aliases(sentences.iter().map(|s| s.text.as_str()));
    Ok(ProcessedDoc {
        mentions,
        definitions,
        length,
        acronyms,
    })
}

/// Per-document bookkeeping beyond the candidate store's ledger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocRecord {
    pub document: Document,
    pub length: u64,
    pub acronyms: Vec<(String, String)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineState {
    pub documents: BTreeMap<String, DocRecord>,
    pub store: CandidateStore,
    /// Definition records by source document.
    pub definitions: BTreeMap<String, Vec<DefinitionRecord>>,
    pub ranked: Option<RankedTopicList>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum UpdateEvent {
    Upsert { document: Document },
    Delete { doc_id: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateOutcome {
    Inserted,
    Replaced,
    Deleted,
    /// Delete of an id the state never saw.
    UnknownDocument,
}

impl PipelineState {
    pub fn new() -> Self {
        Self::default()
    }

    fn insert_processed(&mut self, doc: Document, p: ProcessedDoc) -> Result<(), PipelineError> {
        self.store
            .accumulate(&doc.doc_id, &p.mentions)
            .map_err(|e| PipelineError::stage("accumulate", e.into()))?;
        if !p.definitions.is_empty() {
            self.definitions.insert(doc.doc_id.clone(), p.definitions);
        }
        self.documents.insert(
            doc.doc_id.clone(),
            DocRecord {
                document: doc,
                length: p.length,
                acronyms: p.acronyms,
            },
        );
        Ok(())
    }

    fn remove(&mut self, doc_id: &str) -> bool {
        let known = self.documents.remove(doc_id).is_some();
        self.store.remove_document(doc_id);
        self.definitions.remove(doc_id);
        known
    }

    /// Processes documents in parallel and folds them in. Documents marked
    /// deleted are skipped; a repeated id replaces the earlier version.
    pub fn ingest(&mut self, docs: Vec<Document>, models: &Models) -> Result<(), PipelineError> {
        let processed: Vec<ProcessedDoc> = docs
            .par_iter()
            .filter(|d| !d.deleted)
            .map(|d| process_document(d, models))
            .collect::<Result<_, _>>()
            .map_err(|e| PipelineError::stage("tag", e.into()))?;
        for (doc, p) in docs.into_iter().filter(|d| !d.deleted).zip(processed) {
            self.remove(&doc.doc_id);
            self.insert_processed(doc, p)?;
        }
        Ok(())
    }

    pub fn apply_update(&mut self, event: UpdateEvent, models: &Models) -> Result<UpdateOutcome, PipelineError> {
        match event {
            UpdateEvent::Upsert { document } => {
                if document.deleted {
                    return self.apply_update(UpdateEvent::Delete { doc_id: document.doc_id }, models);
                }
                let p = process_document(&document, models).map_err(|e| PipelineError::stage("tag", e.into()))?;
                let existed = self.remove(&document.doc_id);
                self.insert_processed(document, p)?;
                Ok(if existed { UpdateOutcome::Replaced } else { UpdateOutcome::Inserted })
            }
            UpdateEvent::Delete { doc_id } => {
                if self.remove(&doc_id) {
                    Ok(UpdateOutcome::Deleted)
                } else {
                    log::warn!("delete of unknown document {doc_id:?} ignored");
                    Ok(UpdateOutcome::UnknownDocument)
                }
            }
        }
    }

    /// Recomputes and stores the ranked list; see [`rank_candidates`].
    pub fn rank_refresh(&mut self, ranker: Option<&GbdtModel<f64>>, config: &PipelineConfig) -> &RankedTopicList {
        self.ranked.insert(rank_candidates(&self.store, ranker, config))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        let path = path.as_ref();
        let bytes = serde_json::to_vec(self).map_err(|e| PipelineError::stage("save state", e.into()))?;
        let tmp = path.with_extension("json.tmp");
        std::fs::write(&tmp, bytes)
            .and_then(|_| std::fs::rename(&tmp, path))
            .map_err(|e| PipelineError::stage("save state", e.into()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let bytes = std::fs::read(path.as_ref()).map_err(|e| PipelineError::stage("load state", e.into()))?;
        serde_json::from_slice(&bytes).map_err(|e| PipelineError::stage("load state", e.into()))
    }
}

/// Shortlist and rerank on the current counters. Without a ranker the first
/// `top_k` shortlisted keys are kept with score 1.
pub fn rank_candidates(
    store: &CandidateStore,
    ranker: Option<&GbdtModel<f64>>,
    config: &PipelineConfig,
) -> RankedTopicList {
    let short = shortlist(store, config.shortlist_n);
    match ranker {
        Some(m) => rerank_and_filter(&short, store, m, config.top_k, config.min_score),
        None => RankedTopicList {
            topics: short
                .iter()
                .take(config.top_k)
                .map(|k| RankedTopic {
                    key: k.clone(),
                    score: 1.0,
                })
                .collect(),
            shortlist_size: short.len(),
            top_k: config.top_k,
            min_score: config.min_score,
        },
    }
}
