use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use percent_encoding::{percent_decode_str, utf8_percent_encode, AsciiSet, NON_ALPHANUMERIC};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{rank_candidates, PipelineConfig, PipelineError, PipelineState};
use crate::cardbuild::{
    acronym_key_pairs, batched_randomized_svd, build_card, build_matrix, conflate_topics, write_embeddings,
    CardInput, ConflationCandidate, DocSignals, DocTermStats, EmbeddingKind, EmbeddingSpace, SvdConfig, TopicCard,
};
use crate::topicrank::{normalize_key, RankedTopicList, TopicCandidate};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub run_id: String,
    pub config_hash: String,
    pub corpus_snapshot_id: String,
    /// Seconds since the Unix epoch.
    pub created_at: u64,
    pub n_documents: usize,
    pub n_cards: usize,
    pub embedding_dim: usize,
    /// Card key → file name under `cards/`.
    pub cards: BTreeMap<String, String>,
}

#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    pub cards: Vec<TopicCard>,
    pub manifest: Manifest,
    pub ranked: RankedTopicList,
    pub space: EmbeddingSpace<f64>,
    pub candidates: Vec<TopicCandidate>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn config_hash(config: &PipelineConfig) -> String {
    sha256_hex(&serde_json::to_vec(config).expect("config serializes"))
}

/// Hash of the live documents in id order.
pub fn corpus_snapshot_id(state: &PipelineState) -> String {
    let mut h = Sha256::new();
    for rec in state.documents.values() {
        h.update(serde_json::to_vec(&rec.document).expect("document serializes"));
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

const FILENAME_SAFE: &AsciiSet = &NON_ALPHANUMERIC.remove(b'-').remove(b'_');

/// Percent-encoded card file name.
pub fn card_file_name(key: &str) -> String {
    format!("{}.json", utf8_percent_encode(key, FILENAME_SAFE))
}

/// Inverse of [`card_file_name`].
pub fn key_from_file_name(name: &str) -> Option<String> {
    let stem = name.strip_suffix(".json")?;
    percent_decode_str(stem).decode_utf8().ok().map(|c| c.into_owned())
}

/// Fits SVD settings to the matrix shape; `None` when nothing can be factored.
fn fitted_svd(base: &SvdConfig, n_topics: usize, n_docs: usize) -> Option<SvdConfig> {
    let cap = n_topics.min(n_docs);
    let l = (base.rank + base.oversampling).min(cap);
    let rank = base.rank.min(l);
    if rank == 0 {
        return None;
    }
    if rank < base.rank {
        log::info!("rank reduced from {} to {rank} for a {n_topics} × {n_docs} matrix", base.rank);
    }
    Some(SvdConfig {
        rank,
        oversampling: l - rank,
        ..base.clone()
    })
}

/// Matrix, factorization, conflation and cards for the current state.
/// Ranks first if the state has no ranked list.
pub fn build_kb(state: &PipelineState, config: &PipelineConfig, created_at: u64) -> Result<KnowledgeBase, PipelineError> {
    let ranked = match &state.ranked {
        Some(r) => r.clone(),
        None => rank_candidates(&state.store, None, config),
    };
    let topics: Vec<String> = ranked.keys().map(str::to_string).collect();

    let stats: Vec<DocTermStats> = state
        .documents
        .values()
        .map(|rec| DocTermStats {
            doc_id: rec.document.doc_id.clone(),
            length: rec.length,
            counts: state
                .store
                .contribution(&rec.document.doc_id)
                .map(|c| c.keys.iter().map(|(k, kc)| (k.clone(), kc.count)).collect())
                .unwrap_or_default(),
        })
        .collect();
    let built = build_matrix(&topics, &stats, &config.bm25).map_err(|e| PipelineError::stage("build matrix", e.into()))?;
    let matrix = built.matrix;

    let authors: BTreeMap<String, String> = state
        .documents
        .values()
        .map(|r| (r.document.doc_id.clone(), r.document.author_id.clone()))
        .collect();
    let space = match fitted_svd(&config.svd_config(), matrix.n_topics(), matrix.n_docs()) {
        Some(svd) => {
            let factors =
                batched_randomized_svd(&matrix, &svd).map_err(|e| PipelineError::stage("factorize", e.into()))?;
            log::info!(
                "factorized {} × {} (nnz {}) at rank {}, peak {} bytes",
                matrix.n_topics(),
                matrix.n_docs(),
                matrix.nnz(),
                svd.rank,
                factors.peak_bytes
            );
            EmbeddingSpace::from_factors(factors, &matrix, &authors)
                .map_err(|e| PipelineError::stage("embed", e.into()))?
        }
        None => EmbeddingSpace::empty(0),
    };

    // conflation over the ranked topics
    let all_acronyms: Vec<(String, String)> = state
        .documents
        .values()
        .flat_map(|r| r.acronyms.iter().cloned())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let acronym_keys = acronym_key_pairs(&all_acronyms);
    let empty = BTreeSet::new();
    let conflation_inputs: Vec<ConflationCandidate<'_>> = topics
        .iter()
        .map(|k| {
            let c = state.store.get(k);
            ConflationCandidate {
                key: k,
                ner_frequency: c.map_or(0, |c| c.ner_frequency),
                doc_ids: c.map_or(&empty, |c| &c.doc_ids),
            }
        })
        .collect();
    let conflation = conflate_topics(&conflation_inputs, &space, &acronym_keys, &config.conflation);
    let groups = conflation.aliases();

    let mut defs_by_key: BTreeMap<&str, Vec<&crate::defmine::DefinitionRecord>> = BTreeMap::new();
    for recs in state.definitions.values() {
        for r in recs {
            defs_by_key.entry(r.topic_key.as_str()).or_default().push(r);
        }
    }
    let ranked_set: BTreeSet<&str> = topics.iter().map(String::as_str).collect();

    let mut cards = Vec::new();
    for key in &topics {
        if !conflation.is_canonical(key) {
            continue;
        }
        let Some(cand) = state.store.get(key) else { continue };
        let group: Vec<String> = groups.get(key.as_str()).cloned().unwrap_or_default();
        let mut alternate: BTreeSet<String> = BTreeSet::new();
        for alias in &group {
            alternate.insert(state.store.get(alias).map_or(alias.clone(), |c| c.display_name.clone()));
        }
        let members: BTreeSet<&str> = std::iter::once(key.as_str()).chain(group.iter().map(String::as_str)).collect();
        for (long, short) in &all_acronyms {
            let (Ok(lk), Ok(sk)) = (normalize_key(long), normalize_key(short)) else { continue };
            if members.contains(lk.as_str()) {
                alternate.insert(short.clone());
            } else if members.contains(sk.as_str()) {
                alternate.insert(long.clone());
            }
        }
        alternate.remove(&cand.display_name);
        let definitions = members
            .iter()
            .flat_map(|m| defs_by_key.get(m).cloned().unwrap_or_default())
            .collect();
        let topic_row = matrix.topic_index(key);
        let signals = |doc_id: &str| {
            let bm25 = match (topic_row, matrix.doc_index(doc_id)) {
                (Some(i), Some(j)) => matrix.get(i, j).unwrap_or(0.0),
                _ => 0.0,
            };
            let in_title = members.iter().any(|m| {
                state
                    .store
                    .contribution(doc_id)
                    .and_then(|c| c.keys.get(*m))
                    .is_some_and(|kc| kc.title_count > 0)
            });
            DocSignals {
                bm25,
                in_title,
                timestamp: state.documents.get(doc_id).map_or(0, |r| r.document.timestamp),
            }
        };
        let keep_topic = |id: &str| ranked_set.contains(id) && conflation.is_canonical(id) && !members.contains(id);
        cards.push(build_card(
            CardInput {
                key,
                display_name: &cand.display_name,
                entity_type: &cand.entity_type,
                alternate_names: alternate.into_iter().collect(),
                definitions,
            },
            &space,
            &config.card,
            signals,
            keep_topic,
        ));
    }

    let config_hash = config_hash(config);
    let corpus_snapshot_id = corpus_snapshot_id(state);
    let manifest = Manifest {
        run_id: sha256_hex(format!("{config_hash}:{corpus_snapshot_id}").as_bytes())[..16].to_string(),
        config_hash,
        corpus_snapshot_id,
        created_at,
        n_documents: state.documents.len(),
        n_cards: cards.len(),
        embedding_dim: space.dim(),
        cards: cards.iter().map(|c| (c.key.clone(), card_file_name(&c.key))).collect(),
    };
    Ok(KnowledgeBase {
        cards,
        manifest,
        ranked,
        space,
        candidates: state.store.candidates().cloned().collect(),
    })
}

fn io_stage(stage: &'static str) -> impl Fn(std::io::Error) -> PipelineError {
    move |e| PipelineError::stage(stage, e.into())
}

fn json<T: Serialize>(v: &T) -> Result<Vec<u8>, PipelineError> {
    serde_json::to_vec_pretty(v).map_err(|e| PipelineError::stage("export", e.into()))
}

fn write_all(kb: &KnowledgeBase, dir: &Path) -> Result<(), PipelineError> {
    let cards_dir = dir.join("cards");
    std::fs::create_dir_all(&cards_dir).map_err(io_stage("export"))?;
    for card in &kb.cards {
        std::fs::write(cards_dir.join(card_file_name(&card.key)), json(card)?).map_err(io_stage("export"))?;
    }
    std::fs::write(dir.join("ranked.json"), json(&kb.ranked)?).map_err(io_stage("export"))?;
    let mut snapshot = Vec::new();
    for c in &kb.candidates {
        serde_json::to_writer(&mut snapshot, c).map_err(|e| PipelineError::stage("export", e.into()))?;
        snapshot.push(b'\n');
    }
    std::fs::write(dir.join("candidates.jsonl"), snapshot).map_err(io_stage("export"))?;
    let emb = dir.join("embeddings");
    std::fs::create_dir_all(&emb).map_err(io_stage("export"))?;
    for (kind, stem) in [
        (EmbeddingKind::Topic, "topics"),
        (EmbeddingKind::Doc, "docs"),
        (EmbeddingKind::User, "users"),
    ] {
        write_embeddings(kb.space.table(kind), kind, &emb, stem)
            .map_err(|e| PipelineError::stage("export", e.into()))?;
    }
    std::fs::write(dir.join("manifest.json"), json(&kb.manifest)?).map_err(io_stage("export"))?;
    Ok(())
}

fn sibling(dir: &Path, tag: &str) -> PathBuf {
    let name = dir.file_name().map_or("kb".into(), |n| n.to_string_lossy().into_owned());
    dir.with_file_name(format!(".{name}.{tag}-{}", std::process::id()))
}

/// Writes into a fresh sibling directory, then swaps it into place. On
/// failure the previous export, if any, is left untouched.
pub fn export_kb(kb: &KnowledgeBase, dir: impl AsRef<Path>) -> Result<(), PipelineError> {
    let dir = dir.as_ref();
    if let Some(parent) = dir.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io_stage("export"))?;
    }
    let tmp = sibling(dir, "tmp");
    let _ = std::fs::remove_dir_all(&tmp);
    std::fs::create_dir_all(&tmp).map_err(io_stage("export"))?;
    if let Err(e) = write_all(kb, &tmp) {
        let _ = std::fs::remove_dir_all(&tmp);
        return Err(e);
    }
    let old = sibling(dir, "old");
    let had_old = dir.exists();
    if had_old {
        let _ = std::fs::remove_dir_all(&old);
        if let Err(e) = std::fs::rename(dir, &old) {
            let _ = std::fs::remove_dir_all(&tmp);
            return Err(io_stage("export")(e));
        }
    }
    if let Err(e) = std::fs::rename(&tmp, dir) {
        if had_old {
            let _ = std::fs::rename(&old, dir);
        }
        let _ = std::fs::remove_dir_all(&tmp);
        return Err(io_stage("export")(e));
    }
    if had_old {
        let _ = std::fs::remove_dir_all(&old);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_names_round_trip() {
        for key in ["a/b", "knowledge hub", "..", "naïve-key_1", "100%"] {
            let name = card_file_name(key);
            assert!(!name.contains('/') && !name.contains(' '));
            assert_eq!(key_from_file_name(&name).unwrap(), key);
        }
        assert_eq!(card_file_name("a/b"), "a%2Fb.json");
    }

    #[test]
    fn svd_shape_fitting() {
        let base = SvdConfig {
            rank: 8,
            oversampling: 4,
            ..SvdConfig::default()
        };
        let s = fitted_svd(&base, 5, 100).unwrap();
        assert_eq!((s.rank, s.oversampling), (5, 0));
        let s = fitted_svd(&base, 10, 100).unwrap();
        assert_eq!((s.rank, s.oversampling), (8, 2));
        assert!(fitted_svd(&base, 0, 10).is_none());
    }
}
