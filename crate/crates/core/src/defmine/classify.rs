use std::fmt;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::patterns::{extract_topic, DefinitionPattern};
use super::DefError;
use crate::hashing::hash_features;
use crate::nertag::{log_softmax, softmax};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefinitionCategory {
    Sufficient,
    Informational,
    Referential,
    Personal,
    NonDefinition,
}

impl DefinitionCategory {
    pub const ALL: [DefinitionCategory; 5] = [
        DefinitionCategory::Sufficient,
        DefinitionCategory::Informational,
        DefinitionCategory::Referential,
        DefinitionCategory::Personal,
        DefinitionCategory::NonDefinition,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DefinitionCategory::Sufficient => "sufficient",
            DefinitionCategory::Informational => "informational",
            DefinitionCategory::Referential => "referential",
            DefinitionCategory::Personal => "personal",
            DefinitionCategory::NonDefinition => "non_definition",
        }
    }
}

impl fmt::Display for DefinitionCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DefinitionCategory {
    type Err = DefError;

    fn from_str(s: &str) -> Result<Self, DefError> {
        let norm: String = s
            .trim()
            .to_lowercase()
            .chars()
            .filter(|c| c.is_alphanumeric())
            .collect();
        match norm.as_str() {
            "sufficient" | "sufficientdefinition" => Ok(DefinitionCategory::Sufficient),
            "informational" | "informationaldefinition" => Ok(DefinitionCategory::Informational),
            "referential" | "referentialdefinition" => Ok(DefinitionCategory::Referential),
            "personal" | "personaldefinition" => Ok(DefinitionCategory::Personal),
            "nondefinition" | "none" => Ok(DefinitionCategory::NonDefinition),
            _ => Err(DefError::UnknownCategory(s.to_string())),
        }
    }
}

const REFERENTIAL_SUBJECTS: [&str; 4] = ["it", "this", "that", "these"];
const DEFINITIONAL_VERBS: [&str; 11] = [
    "is", "are", "was", "were", "refers", "refer", "means", "used", "defined", "describes", "denotes",
];
const OCCUPATION_CUES: [&str; 40] = [
    "scientist", "engineer", "manager", "developer", "researcher", "director", "designer", "analyst",
    "architect", "consultant", "professor", "student", "intern", "officer", "ceo", "cto", "cfo", "president",
    "founder", "specialist", "administrator", "doctor", "lawyer", "writer", "author", "teacher",
    "coordinator", "executive", "programmer", "technician", "accountant", "recruiter", "employee",
    "lead", "head", "vp", "partner", "editor", "chief", "owner",
];

fn plain_words(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|w| !w.is_empty())
        .collect()
}

fn is_capitalized(word: &str) -> bool {
    word.chars().next().is_some_and(char::is_uppercase)
}

/// Rule-based category and confidence (1.0 on a rule hit, 0.5 otherwise).
pub fn classify_by_rules(text: &str, patterns: &[DefinitionPattern]) -> (DefinitionCategory, f64) {
    let words = plain_words(text);
    let Some(first) = words.first() else {
        return (DefinitionCategory::NonDefinition, 0.5);
    };
    if REFERENTIAL_SUBJECTS.contains(&first.as_str())
        && words.iter().skip(1).any(|w| DEFINITIONAL_VERBS.contains(&w.as_str()))
    {
        return (DefinitionCategory::Referential, 1.0);
    }
    let Some(ex) = extract_topic(text, patterns) else {
        return (DefinitionCategory::NonDefinition, 0.5);
    };
    let connective = patterns[ex.pattern_id].connective();
    let name_like = ex.topic.split_whitespace().count() <= 3 && ex.topic.split_whitespace().all(is_capitalized);
    let occupation = plain_words(&ex.description)
        .iter()
        .take(4)
        .any(|w| OCCUPATION_CUES.contains(&w.as_str()));
    if (connective == "is a" || connective == "is an") && name_like && occupation {
        (DefinitionCategory::Personal, 1.0)
    } else {
        (DefinitionCategory::Sufficient, 1.0)
    }
}

fn ngram_features(text: &str) -> Vec<String> {
    let words = plain_words(text);
    let mut out = vec!["bias".to_string()];
    out.extend(words.iter().map(|w| format!("u={w}")));
    out.extend(words.windows(2).map(|p| format!("b={} {}", p[0], p[1])));
    if let Some(first) = words.first() {
        out.push(format!("first={first}"));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LinearConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub hash_dim: usize,
}

impl Default for LinearConfig {
    fn default() -> Self {
        LinearConfig {
            epochs: 10,
            learning_rate: 0.2,
            seed: 7,
            hash_dim: 1 << 16,
        }
    }
}

/// Multinomial logistic regression over hashed unigrams and bigrams.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearClassifier<T> {
    dim: usize,
    /// `dim × 5`, row-major by feature.
    weights: Vec<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct StoredLinear<T> {
    dim: usize,
    rows: Vec<(usize, Vec<T>)>,
}

const K: usize = 5;

impl<T: Scalar> LinearClassifier<T> {
    fn logits(&self, features: &[usize]) -> Vec<T> {
        let mut z = vec![T::zero(); K];
        for &f in features {
            for (zk, &w) in z.iter_mut().zip(&self.weights[f * K..(f + 1) * K]) {
                *zk = *zk + w;
            }
        }
        z
    }

    pub fn probabilities(&self, text: &str) -> Vec<T> {
        softmax(&self.logits(&hash_features(&ngram_features(text), self.dim)))
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SentenceClassifier<T> {
    Rule { patterns: Vec<DefinitionPattern> },
    Linear(LinearClassifier<T>),
}

impl<T: Scalar> SentenceClassifier<T> {
    pub fn rule(patterns: Vec<DefinitionPattern>) -> Self {
        SentenceClassifier::Rule { patterns }
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<(), DefError> {
        let SentenceClassifier::Linear(m) = self else {
            return Err(DefError::InvalidConfig("only linear classifiers are persisted".into()));
        };
        let rows = m
            .weights
            .chunks(K)
            .enumerate()
            .filter(|(_, r)| r.iter().any(|w| *w != T::zero()))
            .map(|(f, r)| (f, r.to_vec()))
            .collect();
        let json = serde_json::to_vec(&StoredLinear { dim: m.dim, rows })
            .map_err(|e| DefError::Format(e.to_string()))?;
        std::fs::write(path.as_ref(), json).map_err(|source| DefError::Io {
            path: path.as_ref().display().to_string(),
            source,
        })
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self, DefError> {
        let bytes = std::fs::read(path.as_ref()).map_err(|source| DefError::Io {
            path: path.as_ref().display().to_string(),
            source,
        })?;
        let stored: StoredLinear<T> =
            serde_json::from_slice(&bytes).map_err(|e| DefError::Format(e.to_string()))?;
        if stored.dim == 0 {
            return Err(DefError::Format("zero hash dimension".into()));
        }
        let mut weights = vec![T::zero(); stored.dim * K];
        for (f, row) in stored.rows {
            if f >= stored.dim || row.len() != K {
                return Err(DefError::Format(format!("bad weight row {f}")));
            }
            weights[f * K..(f + 1) * K].copy_from_slice(&row);
        }
        Ok(SentenceClassifier::Linear(LinearClassifier {
            dim: stored.dim,
            weights,
        }))
    }
}

/// Exactly one category per sentence, with a confidence in `[0, 1]`.
pub fn classify_sentence<T: Scalar>(classifier: &SentenceClassifier<T>, text: &str) -> (DefinitionCategory, f64) {
    match classifier {
        SentenceClassifier::Rule { patterns } => classify_by_rules(text, patterns),
        SentenceClassifier::Linear(m) => {
            let p = m.probabilities(text);
            let mut best = 0;
            for k in 1..K {
                if p[k] > p[best] {
                    best = k;
                }
            }
            (DefinitionCategory::ALL[best], p[best].as_f64())
        }
    }
}

/// SGD on cross-entropy; example order shuffled per epoch from the seed.
pub fn train_sentence_classifier<T: Scalar>(
    rows: &[(String, DefinitionCategory)],
    config: &LinearConfig,
) -> Result<SentenceClassifier<T>, DefError> {
    if rows.is_empty() {
        return Err(DefError::EmptyTrainingData);
    }
    let first = rows[0].1;
    if rows.iter().all(|(_, c)| *c == first) {
        return Err(DefError::SingleClass);
    }
    if config.hash_dim == 0 || !(config.learning_rate > 0.0) {
        return Err(DefError::InvalidConfig("hash_dim and learning_rate must be positive".into()));
    }
    let examples: Vec<(Vec<usize>, usize)> = rows
        .iter()
        .map(|(t, c)| (hash_features(&ngram_features(t), config.hash_dim), c.index()))
        .collect();
    let mut model = LinearClassifier {
        dim: config.hash_dim,
        weights: vec![T::zero(); config.hash_dim * K],
    };
    let lr = T::of(config.learning_rate);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &e in &order {
            let (feats, gold) = &examples[e];
            let p: Vec<T> = log_softmax(&model.logits(feats)).into_iter().map(T::exp).collect();
            for &f in feats {
                for (k, w) in model.weights[f * K..(f + 1) * K].iter_mut().enumerate() {
                    let target = if k == *gold { T::one() } else { T::zero() };
                    *w = *w - lr * (p[k] - target);
                }
            }
        }
    }
    Ok(SentenceClassifier::Linear(model))
}

/// Reads `category,text` rows (header optional).
pub fn read_category_csv<R: Read>(reader: R) -> Result<Vec<(String, DefinitionCategory)>, DefError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(reader);
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| DefError::Format(e.to_string()))?;
        if rec.len() != 2 {
            return Err(DefError::Format(format!("row {}: expected category,text", i + 1)));
        }
        if i == 0 && rec[0].trim() == "category" && rec[1].trim() == "text" {
            continue;
        }
        out.push((rec[1].to_string(), rec[0].parse()?));
    }
    Ok(out)
}

pub fn read_category_file(path: impl AsRef<Path>) -> Result<Vec<(String, DefinitionCategory)>, DefError> {
    let file = std::fs::File::open(path.as_ref()).map_err(|source| DefError::Io {
        path: path.as_ref().display().to_string(),
        source,
    })?;
    read_category_csv(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::defmine::default_patterns;

    fn rule() -> SentenceClassifier<f64> {
        SentenceClassifier::rule(default_patterns())
    }

    #[test]
    fn appendix_examples() {
        let c = rule();
        let cases = [
            ("Statistics is a branch of mathematics dealing with data collection, organization, analysis, interpretation, and presentation.", DefinitionCategory::Sufficient),
            ("This method is used to identifying a hyperplane which separates a positive class from the negative class.", DefinitionCategory::Referential),
            ("Tom is a Data Scientist at Acme Corporation working on natural language processing.", DefinitionCategory::Personal),
            ("The Caterpillar 797B is the biggest car I've ever seen.", DefinitionCategory::NonDefinition),
        ];
        for (text, want) in cases {
            assert_eq!(classify_sentence(&c, text).0, want, "{text}");
        }
        assert_eq!(classify_sentence(&c, "Statistics is a branch of mathematics.").1, 1.0);
        assert_eq!(classify_sentence(&c, "Nothing to see.").1, 0.5);
        assert_eq!(classify_sentence(&c, "").0, DefinitionCategory::NonDefinition);
    }

    #[test]
    fn category_names() {
        for c in DefinitionCategory::ALL {
            assert_eq!(c.as_str().parse::<DefinitionCategory>().unwrap(), c);
        }
        assert_eq!("Sufficient Definition".parse::<DefinitionCategory>().unwrap(), DefinitionCategory::Sufficient);
        assert_eq!("Non-definition".parse::<DefinitionCategory>().unwrap(), DefinitionCategory::NonDefinition);
        assert!("weird".parse::<DefinitionCategory>().is_err());
    }

    #[test]
    fn training_errors() {
        assert!(matches!(
            train_sentence_classifier::<f64>(&[], &LinearConfig::default()),
            Err(DefError::EmptyTrainingData)
        ));
        let one = vec![("a".to_string(), DefinitionCategory::Personal); 3];
        assert!(matches!(
            train_sentence_classifier::<f64>(&one, &LinearConfig::default()),
            Err(DefError::SingleClass)
        ));
    }

    #[test]
    fn csv_rows() {
        let rows = read_category_csv("category,text\nsufficient,\"X is a y, z.\"\npersonal,Tom is a dev.\n".as_bytes())
            .unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].0, "X is a y, z.");
    }
}
