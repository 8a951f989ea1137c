use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::cardbuild::{Bm25Params, CardConfig, ConflationConfig, SvdConfig};
use crate::nertag::DEFAULT_ENTITY_TYPES;

/// Everything a run needs. Read from TOML; unset keys take defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// JSONL corpus.
    pub corpus: Option<PathBuf>,
    pub entity_types: Vec<String>,
    /// Trained tagger (JSON). Exactly one of this and `tagger_scores`.
    pub tagger_model: Option<PathBuf>,
    /// Externally produced per-token scores (JSONL).
    pub tagger_scores: Option<PathBuf>,
    /// Trained reranker; without one the shortlist order is kept.
    pub ranker_model: Option<PathBuf>,
    /// Trained sentence classifier; without one the rule classifier is used.
    pub def_classifier: Option<PathBuf>,
    pub patterns: Option<PathBuf>,
    pub negative_lexicon: Option<PathBuf>,
    pub positive_lexicon: Option<PathBuf>,
    pub abbreviations: Option<PathBuf>,
    /// Shortlist size N.
    pub shortlist_n: usize,
    /// Final number of topics.
    pub top_k: usize,
    pub min_score: f64,
    pub bm25: Bm25Params<f64>,
    pub svd: SvdConfig,
    pub card: CardConfig,
    pub conflation: ConflationConfig,
    pub out: PathBuf,
    /// Persisted state for incremental updates.
    pub state: PathBuf,
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            corpus: None,
            entity_types: DEFAULT_ENTITY_TYPES.iter().map(|s| s.to_string()).collect(),
            tagger_model: None,
            tagger_scores: None,
            ranker_model: None,
            def_classifier: None,
            patterns: None,
            negative_lexicon: None,
            positive_lexicon: None,
            abbreviations: None,
            shortlist_n: 500,
            top_k: 100,
            min_score: 0.5,
            bm25: Bm25Params::default(),
            svd: SvdConfig::default(),
            card: CardConfig::default(),
            conflation: ConflationConfig::default(),
            out: PathBuf::from("kb"),
            state: PathBuf::from("topicforge-state.json"),
            seed: 0,
        }
    }
}

/// Command-line values that win over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigOverrides {
    pub corpus: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub top_n: Option<usize>,
    pub card_k: Option<usize>,
    pub mem_budget: Option<u64>,
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, PipelineError> {
        toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml_str(&text)?;
        config.resolve_relative_to(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }

    /// Relative paths in a config file are taken relative to that file.
    fn resolve_relative_to(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut self.corpus,
            &mut self.tagger_model,
            &mut self.tagger_scores,
            &mut self.ranker_model,
            &mut self.def_classifier,
            &mut self.patterns,
            &mut self.negative_lexicon,
            &mut self.positive_lexicon,
            &mut self.abbreviations,
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        fix(&mut self.out);
        fix(&mut self.state);
    }

    pub fn apply(&mut self, o: &ConfigOverrides) {
        if let Some(c) = &o.corpus {
            self.corpus = Some(c.clone());
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(n) = o.top_n {
            self.shortlist_n = n;
        }
        if let Some(k) = o.card_k {
            self.card.k = k;
        }
        if let Some(b) = o.mem_budget {
            self.svd.memory_budget = b;
        }
    }

    /// The seed used by the factorization: the run seed unless the SVD
    /// section sets its own.
    pub fn svd_config(&self) -> SvdConfig {
        let mut svd = self.svd.clone();
        if svd.seed == 0 {
            svd.seed = self.seed;
        }
        svd
    }

    /// Structural checks plus readability of every referenced input.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if self.top_k > self.shortlist_n {
            return bad(format!("top_k ({}) exceeds shortlist_n ({})", self.top_k, self.shortlist_n));
        }
        if self.entity_types.is_empty() {
            return bad("entity_types is empty".into());
        }
        if self.tagger_model.is_some() == self.tagger_scores.is_some() {
            return bad("set exactly one of tagger_model and tagger_scores".into());
        }
        if self.svd.rank == 0 || self.svd.batch_size == 0 {
            return bad("svd rank and batch_size must be at least 1".into());
        }
        if !(self.bm25.k1 > 0.0) || !(0.0..=1.0).contains(&self.bm25.b) {
            return bad("bm25 needs k1 > 0 and b in [0, 1]".into());
        }
        for p in [
            &self.corpus,
            &self.tagger_model,
            &self.tagger_scores,
            &self.ranker_model,
            &self.def_classifier,
            &self.patterns,
            &self.negative_lexicon,
            &self.positive_lexicon,
            &self.abbreviations,
        ]
        .into_iter()
        .flatten()
        {
            if std::fs::File::open(p).is_err() {
                return bad(format!("{} is not readable", p.display()));
            }
        }
        Ok(())
    }
}
