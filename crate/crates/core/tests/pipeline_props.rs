mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::sync::LazyLock;

use proptest::prelude::*;

use topicforge::cardbuild::EmbeddingKind;
use topicforge::corpus::Document;
use topicforge::nertag::{train_tagger, TaggerConfig, TaggerModel};
use topicforge::pipeline::{
    build_kb, export_kb, key_from_file_name, run_full, run_with_models, Manifest, Models, PipelineConfig,
    PipelineState, Scorer, UpdateEvent, UpdateOutcome,
};

static TAGGER: LazyLock<TaggerModel<f64>> = LazyLock::new(|| {
    let train = common::planted_corpus(100, 500);
    train_tagger(&train.labeled, &common::label_set(), &TaggerConfig::default()).unwrap()
});

fn models() -> Models {
    Models::with_scorer(Scorer::Tagger(TAGGER.clone()))
}

#[derive(Debug, Clone)]
enum Event {
    Upsert { doc: usize, version: usize },
    Delete { doc: usize },
}

fn events() -> impl Strategy<Value = Vec<Event>> {
    prop::collection::vec(
        prop_oneof![
            3 => (0usize..30, 0usize..2).prop_map(|(doc, version)| Event::Upsert { doc, version }),
            1 => (0usize..30).prop_map(|doc| Event::Delete { doc }),
        ],
        1..60,
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn updates_match_a_fresh_batch(events in events()) {
        let versions = [common::planted_corpus(30, 1).docs, common::planted_corpus(30, 2).docs];
        let models = models();
        let config = PipelineConfig::default();

        let mut live = PipelineState::new();
        let mut truth: BTreeMap<usize, Document> = BTreeMap::new();
        for e in &events {
            match *e {
                Event::Upsert { doc, version } => {
                    let d = versions[version][doc].clone();
                    let out = live.apply_update(UpdateEvent::Upsert { document: d.clone() }, &models).unwrap();
                    let expected = if truth.contains_key(&doc) { UpdateOutcome::Replaced } else { UpdateOutcome::Inserted };
                    prop_assert_eq!(out, expected);
                    truth.insert(doc, d);
                }
                Event::Delete { doc } => {
                    live.apply_update(UpdateEvent::Delete { doc_id: common::doc_id(doc) }, &models).unwrap();
                    truth.remove(&doc);
                }
            }
        }
        let mut fresh = PipelineState::new();
        fresh.ingest(truth.into_values().collect(), &models).unwrap();
        prop_assert_eq!(&live.store, &fresh.store);
        prop_assert_eq!(&live.definitions, &fresh.definitions);
        for c in live.store.candidates() {
            prop_assert!(c.ner_frequency >= c.document_frequency && c.document_frequency >= 1);
        }

        live.rank_refresh(None, &config);
        fresh.rank_refresh(None, &config);
        prop_assert_eq!(&live.ranked, &fresh.ranked);
        let (a, b) = (build_kb(&live, &config, 0).unwrap(), build_kb(&fresh, &config, 0).unwrap());
        prop_assert_eq!(a.cards, b.cards);
        prop_assert_eq!(a.manifest, b.manifest);
    }
}

#[test]
fn cards_are_well_formed() {
    let mut config = PipelineConfig::default();
    config.card.k = 4;
    let (_, kb) = run_with_models(common::planted_corpus(80, 3).docs, &models(), &config).unwrap();
    assert!(!kb.cards.is_empty());
    let keys: BTreeSet<&str> = kb.cards.iter().map(|c| c.key.as_str()).collect();
    assert_eq!(keys.len(), kb.cards.len());
    let ids = |kind| -> BTreeSet<&str> { kb.space.table(kind).ids().iter().map(String::as_str).collect() };
    let (topics, docs, users) = (ids(EmbeddingKind::Topic), ids(EmbeddingKind::Doc), ids(EmbeddingKind::User));
    for c in &kb.cards {
        assert!(c.related_topics.len() <= 4 && c.related_docs.len() <= 4 && c.related_people.len() <= 4);
        assert!(c.related_topics.iter().all(|r| r.id != c.key && topics.contains(r.id.as_str())));
        assert!(c.related_docs.iter().all(|r| docs.contains(r.id.as_str())));
        assert!(c.related_people.iter().all(|r| users.contains(r.id.as_str())));
        assert!(c.definitions.len() <= config.card.max_definitions);
    }
    assert_eq!(kb.manifest.n_cards, kb.cards.len());
}

#[test]
fn full_run_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path();
    let corpus: String = common::planted_corpus(60, 9)
        .docs
        .iter()
        .map(|d| serde_json::to_string(d).unwrap() + "\n")
        .collect();
    std::fs::write(root.join("corpus.jsonl"), corpus + "not json\n").unwrap();
    TAGGER.save_json(root.join("tagger.json")).unwrap();
    std::fs::write(
        root.join("run.toml"),
        "corpus = \"corpus.jsonl\"\ntagger_model = \"tagger.json\"\nout = \"kb\"\nstate = \"state.json\"\nseed = 4\n[svd]\nrank = 6\n",
    )
    .unwrap();
    let config = PipelineConfig::from_file(root.join("run.toml")).unwrap();
    let (state, kb) = run_full(&config).unwrap();
    assert_eq!(state.documents.len(), 60);

    let out = root.join("kb");
    let manifest: Manifest = serde_json::from_slice(&std::fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest, kb.manifest);
    assert_eq!(manifest.embedding_dim, 6);
    for (key, file) in &manifest.cards {
        assert!(out.join("cards").join(file).is_file());
        assert_eq!(key_from_file_name(file).as_deref(), Some(key.as_str()));
    }
    for f in ["ranked.json", "candidates.jsonl", "embeddings/topics.bin", "embeddings/docs.json", "embeddings/users.bin"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    assert_eq!(PipelineState::load(root.join("state.json")).unwrap(), state);

    // a second export replaces the first without leaving staging directories
    export_kb(&kb, &out).unwrap();
    let stray: Vec<_> = std::fs::read_dir(root)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .filter(|n| n.starts_with('.'))
        .collect();
    assert!(stray.is_empty(), "{stray:?}");
}

#[test]
fn same_seed_same_knowledge_base() {
    let docs = common::planted_corpus(50, 12).docs;
    let config = PipelineConfig::default();
    let (_, a) = run_with_models(docs.clone(), &models(), &config).unwrap();
    let (_, b) = run_with_models(docs, &models(), &config).unwrap();
    assert_eq!(a.cards, b.cards);
    assert_eq!(a.manifest.run_id, b.manifest.run_id);
}
