use serde::{Deserialize, Serialize};

use super::{top_k_related_where, EmbeddingKind, EmbeddingSpace, Related};
use crate::defmine::{DefinitionCategory, DefinitionRecord};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CardDefinition {
    pub sentence: String,
    pub description: String,
    pub doc_id: String,
    pub sentence_index: usize,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicCard {
    pub key: String,
    pub display_name: String,
    pub entity_type: String,
    pub alternate_names: Vec<String>,
    pub definitions: Vec<CardDefinition>,
    pub related_topics: Vec<Related>,
    pub related_docs: Vec<Related>,
    pub related_people: Vec<Related>,
}

/// Reranking signals of one document with respect to the card's topic.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DocSignals {
    pub bm25: f64,
    pub in_title: bool,
    pub timestamp: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RerankWeights {
    pub bm25: f64,
    pub title: f64,
    pub recency: f64,
}

impl Default for RerankWeights {
    fn default() -> Self {
        RerankWeights {
            bm25: 1.0,
            title: 0.5,
            recency: 0.2,
        }
    }
}

/// Stable sort by `w.bm25·bm25/max + w.title·[in title] + w.recency·recency`,
/// recency being the timestamp min-max scaled over the candidates. The
/// returned scores are the rerank scores.
pub fn rerank_related_docs(candidates: &[Related], signals: &[DocSignals], weights: &RerankWeights) -> Vec<Related> {
    assert_eq!(candidates.len(), signals.len(), "one signal per candidate");
    let max_bm25 = signals.iter().map(|s| s.bm25).fold(0.0, f64::max);
    let t_min = signals.iter().map(|s| s.timestamp).min().unwrap_or(0);
    let t_max = signals.iter().map(|s| s.timestamp).max().unwrap_or(0);
    let mut scored: Vec<Related> = candidates
        .iter()
        .zip(signals)
        .map(|(c, s)| {
            let bm25 = if max_bm25 > 0.0 { s.bm25 / max_bm25 } else { 0.0 };
            let recency = if t_max > t_min {
                (s.timestamp - t_min) as f64 / (t_max - t_min) as f64
            } else {
                0.0
            };
            let title = if s.in_title { 1.0 } else { 0.0 };
            Related {
                id: c.id.clone(),
                score: weights.bm25 * bm25 + weights.title * title + weights.recency * recency,
            }
        })
        .collect();
    scored.sort_by(|a, b| b.score.total_cmp(&a.score));
    scored
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CardConfig {
    /// Length cap for every related list.
    pub k: usize,
    /// Embedding candidates fetched before document reranking.
    pub doc_candidates: usize,
    pub max_definitions: usize,
    pub rerank: RerankWeights,
}

impl Default for CardConfig {
    fn default() -> Self {
        CardConfig {
            k: 10,
            doc_candidates: 30,
            max_definitions: 3,
            rerank: RerankWeights::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CardInput<'a> {
    pub key: &'a str,
    pub display_name: &'a str,
    pub entity_type: &'a str,
    pub alternate_names: Vec<String>,
    /// Records for the key and its aliases; non-`Sufficient` ones are ignored.
    pub definitions: Vec<&'a DefinitionRecord>,
}

/// Assembles one card. Topics absent from the space get empty related lists.
pub fn build_card<T: Scalar>(
    input: CardInput<'_>,
    space: &EmbeddingSpace<T>,
    config: &CardConfig,
    signals: impl Fn(&str) -> DocSignals,
    keep_topic: impl Fn(&str) -> bool,
) -> TopicCard {
    let mut defs: Vec<&DefinitionRecord> = input
        .definitions
        .into_iter()
        .filter(|d| d.category == DefinitionCategory::Sufficient)
        .collect();
    defs.sort_by(|a, b| {
        b.confidence
            .total_cmp(&a.confidence)
            .then_with(|| a.doc_id.cmp(&b.doc_id))
            .then_with(|| a.sentence_index.cmp(&b.sentence_index))
    });
    let mut definitions: Vec<CardDefinition> = Vec::new();
    for d in defs {
        if definitions.len() == config.max_definitions {
            break;
        }
        if definitions.iter().any(|c| c.sentence == d.sentence) {
            continue;
        }
        definitions.push(CardDefinition {
            sentence: d.sentence.clone(),
            description: d.description.clone(),
            doc_id: d.doc_id.clone(),
            sentence_index: d.sentence_index,
            confidence: d.confidence,
        });
    }

    let related = |kind, k| top_k_related_where(input.key, space, kind, k, &keep_topic).unwrap_or_default();
    let related_topics = related(EmbeddingKind::Topic, config.k);
    let related_people =
        top_k_related_where(input.key, space, EmbeddingKind::User, config.k, |_| true).unwrap_or_default();
    let candidates = top_k_related_where(
        input.key,
        space,
        EmbeddingKind::Doc,
        config.doc_candidates.max(config.k),
        |_| true,
    )
    .unwrap_or_default();
    let mut related_docs = if candidates.is_empty() {
        Vec::new()
    } else {
        let sig: Vec<DocSignals> = candidates.iter().map(|c| signals(&c.id)).collect();
        rerank_related_docs(&candidates, &sig, &config.rerank)
    };
    related_docs.truncate(config.k);

    TopicCard {
        key: input.key.to_string(),
        display_name: input.display_name.to_string(),
        entity_type: input.entity_type.to_string(),
        alternate_names: input.alternate_names,
        definitions,
        related_topics,
        related_docs,
        related_people,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(id: &str) -> Related {
        Related {
            id: id.into(),
            score: 0.0,
        }
    }

    #[test]
    fn title_flag_wins_ties() {
        let c = [rel("a"), rel("b")];
        let s = [
            DocSignals { bm25: 1.0, in_title: false, timestamp: 5 },
            DocSignals { bm25: 1.0, in_title: true, timestamp: 5 },
        ];
        let out = rerank_related_docs(&c, &s, &RerankWeights::default());
        assert_eq!(out[0].id, "b");
        assert!((out[0].score - 1.5).abs() < 1e-12);
    }

    #[test]
    fn equal_signals_keep_order() {
        let c = [rel("z"), rel("a"), rel("m")];
        let s = [DocSignals::default(); 3];
        let ids: Vec<String> = rerank_related_docs(&c, &s, &RerankWeights::default())
            .into_iter()
            .map(|r| r.id)
            .collect();
        assert_eq!(ids, ["z", "a", "m"]);
        assert_eq!(rerank_related_docs(&c[..1], &s[..1], &RerankWeights::default())[0].id, "z");
    }
}
