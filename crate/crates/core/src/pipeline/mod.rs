//! End-to-end orchestration.
//!
//! A [`PipelineState`] holds every live document with its contributions
//! (mention counts, definitions, acronyms), so updates and deletions are
//! exact. Ranking and knowledge-base builds read the state; embeddings are
//! rebuilt on demand.

mod config;
mod eval;
mod kb;
mod state;

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use thiserror::Error;

pub use config::{ConfigOverrides, PipelineConfig};
pub use eval::{brute_force_decode, viterbi_suite, ViterbiReport};
pub use kb::{build_kb, card_file_name, config_hash, corpus_snapshot_id, export_kb, key_from_file_name, KnowledgeBase, Manifest};
pub use state::{
    process_document, rank_candidates, DocRecord, Models, PipelineState, ProcessedDoc, Scorer, UpdateEvent,
    UpdateOutcome,
};

use crate::corpus::{ingest_jsonl, Document};

type BoxError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: BoxError,
    },
}

impl PipelineError {
    pub fn stage(stage: &'static str, source: BoxError) -> Self {
        PipelineError::Stage { stage, source }
    }
}

pub fn now_unix() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

/// Reads a corpus, logging and skipping malformed lines.
pub fn load_corpus(path: &Path) -> Result<Vec<Document>, PipelineError> {
    let ingested = ingest_jsonl(path).map_err(|e| PipelineError::stage("ingest", e.into()))?;
    for e in &ingested.errors {
        log::warn!("{}: line {}: {}", path.display(), e.line, e.reason);
    }
    Ok(ingested.documents)
}

/// Fresh state from `docs`, ranked, with its knowledge base.
pub fn run_with_models(
    docs: Vec<Document>,
    models: &Models,
    config: &PipelineConfig,
) -> Result<(PipelineState, KnowledgeBase), PipelineError> {
    let mut state = PipelineState::new();
    state.ingest(docs, models)?;
    state.rank_refresh(models.ranker.as_ref(), config);
    let kb = build_kb(&state, config, now_unix())?;
    Ok((state, kb))
}

/// Validates the config, loads corpus and models, builds the knowledge base,
/// exports it to `config.out` and saves the state to `config.state`.
pub fn run_full(config: &PipelineConfig) -> Result<(PipelineState, KnowledgeBase), PipelineError> {
    config.validate()?;
    let corpus = config
        .corpus
        .as_deref()
        .ok_or_else(|| PipelineError::Config("no corpus given".into()))?;
    let docs = load_corpus(corpus)?;
    let models = Models::load(config)?;
    let (state, kb) = run_with_models(docs, &models, config)?;
    export_kb(&kb, &config.out)?;
    state.save(&config.state)?;
    Ok((state, kb))
}
