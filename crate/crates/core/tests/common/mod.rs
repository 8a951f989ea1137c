//! Synthetic corpus with planted topics, definitions and authorship, plus
//! gold BIO labels for training a tagger on it.
#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topicforge::corpus::{split_sentences, tokenize, Document, Span};
use topicforge::nertag::{Label, LabelSet, LabeledSentence, DEFAULT_ENTITY_TYPES};

pub const TOPICS: [(&str, &str); 10] = [
    ("Falcon Ledger", "product"),
    ("Nimbus Grid", "product"),
    ("Orchid Vault", "project"),
    ("Quartz Relay", "product"),
    ("Helix Forge", "project"),
    ("Aurora Beacon", "project"),
    ("Tundra Mesh", "product"),
    ("Zephyr Atlas", "project"),
    ("Cobalt Harbor", "organization"),
    ("Saffron Loom", "product"),
];

/// Definition sentences for the first five topics, each placed in exactly
/// one document.
pub const DEFINITIONS: [&str; 5] = [
    "Falcon Ledger is defined as the internal system of record for vendor payments.",
    "Nimbus Grid is a scheduling service that balances batch jobs across clusters.",
    "Orchid Vault refers to the encrypted archive used for legal holds.",
    "Quartz Relay is a message bus connecting billing and analytics systems.",
    "Helix Forge means the build farm that compiles every mobile app.",
];

pub const AUTHORS: [&str; 4] = ["u-ana", "u-bo", "u-cyd", "u-dev"];

const PEOPLE: [&str; 6] = ["Dana Whitfield", "Ravi Patel", "Mei Lin", "Omar Haddad", "Lena Fischer", "Tom Baker"];
const CITIES: [&str; 4] = ["Oslo", "Lisbon", "Nairobi", "Denver"];

pub fn author_of(topic: usize) -> &'static str {
    AUTHORS[topic % AUTHORS.len()]
}

pub fn topic_key(topic: usize) -> String {
    TOPICS[topic].0.to_lowercase()
}

pub fn doc_id(i: usize) -> String {
    format!("doc-{i:04}")
}

/// Text under construction with the byte spans of its entities.
#[derive(Default)]
struct Builder {
    text: String,
    entities: Vec<(Span, &'static str)>,
}

impl Builder {
    fn plain(&mut self, s: &str) -> &mut Self {
        self.text.push_str(s);
        self
    }

    fn entity(&mut self, s: &str, ty: &'static str) -> &mut Self {
        let start = self.text.len();
        self.text.push_str(s);
        self.entities.push((Span::new(start, self.text.len()), ty));
        self
    }
}

pub struct Planted {
    pub docs: Vec<Document>,
    pub labeled: Vec<LabeledSentence>,
    /// Topic index → id of the document carrying its definition.
    pub definition_docs: Vec<(usize, String)>,
}

fn person(rng: &mut ChaCha8Rng) -> &'static str {
    PEOPLE.choose(rng).unwrap()
}

fn body_for(i: usize, topic: usize, rng: &mut ChaCha8Rng) -> Builder {
    let (name, ty) = TOPICS[topic];
    let mut b = Builder::default();
    if i < DEFINITIONS.len() {
        // the definition sentence mentions the topic as its subject
        let def = DEFINITIONS[i];
        b.entity(name, ty).plain(&def[name.len()..]).plain(" ");
    }
    b.plain("The ").entity(name, ty).plain(" team shipped a new release this week. ");
    b.entity(name, ty).plain(" now supports faster exports for finance. ");
    if rng.random_bool(0.7) {
        b.plain("We migrated three services onto ").entity(name, ty).plain(" last month. ");
    }
    b.plain("Feedback came from ")
        .entity(person(rng), "person")
        .plain(" in ")
        .entity(CITIES.choose(rng).unwrap(), "location")
        .plain(". ");
    if rng.random_bool(0.5) {
        b.entity(person(rng), "person").plain(" will review the rollout plan. ");
    }
    if rng.random_bool(0.3) {
        let owned: Vec<usize> = (0..TOPICS.len()).filter(|&t| t != topic && author_of(t) == author_of(topic)).collect();
        let other = *owned.choose(rng).unwrap();
        b.plain("The work also touches ").entity(TOPICS[other].0, TOPICS[other].1).plain(" for reporting. ");
    }
    b.plain(&format!("Ticket {} was closed on day {}.", 7000 + i, 1 + i % 28));
    b
}

/// Gold BIO labels from entity spans, aligned through the real splitter and
/// tokenizer.
fn label_document(doc: &Document, title: &Builder, body: &Builder, labels: &LabelSet) -> Vec<LabeledSentence> {
    split_sentences(doc)
        .iter()
        .map(|s| {
            let ents = if s.from_title { &title.entities } else { &body.entities };
            let tokens = tokenize(s);
            let labels = tokens
                .iter()
                .map(|t| {
                    let at = s.char_span.start + t.char_span.start;
                    match ents.iter().find(|(sp, _)| sp.start <= at && at < sp.end) {
                        Some((sp, ty)) => {
                            let k = labels.type_index(ty).unwrap();
                            if sp.start == at {
                                Label::B(k)
                            } else {
                                Label::I(k)
                            }
                        }
                        None => Label::O,
                    }
                })
                .collect();
            LabeledSentence {
                tokens: tokens.into_iter().map(|t| t.surface).collect(),
                labels,
                from_title: s.from_title,
            }
        })
        .collect()
}

pub fn label_set() -> LabelSet {
    LabelSet::new(DEFAULT_ENTITY_TYPES).unwrap()
}

/// `n_docs` documents; document `i` is about topic `i % 10`, written by
/// that topic's owner. Documents 0..5 carry the definitions.
pub fn planted_corpus(n_docs: usize, seed: u64) -> Planted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = label_set();
    let mut docs = Vec::new();
    let mut labeled = Vec::new();
    for i in 0..n_docs {
        let topic = i % TOPICS.len();
        let (name, ty) = TOPICS[topic];
        let mut title = Builder::default();
        title.entity(name, ty).plain(" weekly update");
        let body = body_for(i, topic, &mut rng);
        let doc = Document {
            doc_id: doc_id(i),
            title: title.text.clone(),
            body: body.text.clone(),
            author_id: author_of(topic).to_string(),
            timestamp: 1_600_000_000 + 3600 * i as u64,
            deleted: false,
        };
        labeled.extend(label_document(&doc, &title, &body, &labels));
        docs.push(doc);
    }
    Planted {
        docs,
        labeled,
        definition_docs: (0..DEFINITIONS.len().min(n_docs)).map(|t| (t, doc_id(t))).collect(),
    }
}
