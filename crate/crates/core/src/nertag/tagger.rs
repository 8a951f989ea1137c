use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::featurize;
use super::focal::{focal_loss, log_softmax, softmax};
use super::{is_valid_bio, LabelSet, LabeledSentence, NerError, ScoreMatrix};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaggerConfig {
    pub gamma: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub hash_dim: usize,
}

impl Default for TaggerConfig {
    fn default() -> Self {
        TaggerConfig {
            gamma: 1.6,
            epochs: 8,
            learning_rate: 0.1,
            seed: 42,
            hash_dim: 1 << 16,
        }
    }
}

/// Hashed-feature softmax classifier over BIO labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggerModel<T> {
    labels: LabelSet,
    gamma: T,
    dim: usize,
    /// `dim × labels`, row-major by feature.
    weights: Vec<T>,
    training_loss: Option<T>,
}

#[derive(Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct StoredTagger<T> {
    labels: LabelSet,
    gamma: T,
    dim: usize,
    training_loss: Option<T>,
    /// Non-zero feature rows only.
    rows: Vec<(usize, Vec<T>)>,
}

impl<T: Scalar> TaggerModel<T> {
    /// All-zero weights: every row scores uniformly.
    pub fn untrained(labels: LabelSet, gamma: T, dim: usize) -> Result<Self, NerError> {
        if !(gamma >= T::zero()) || !gamma.is_finite() {
            return Err(NerError::InvalidGamma(gamma.as_f64()));
        }
        if dim == 0 {
            return Err(NerError::InvalidConfig("hash dimension must be positive".into()));
        }
        let weights = vec![T::zero(); dim * labels.len()];
        Ok(TaggerModel {
            labels,
            gamma,
            dim,
            weights,
            training_loss: None,
        })
    }

    pub fn labels(&self) -> &LabelSet {
        &self.labels
    }

    pub fn gamma(&self) -> T {
        self.gamma
    }

    pub fn hash_dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    /// Mean focal loss over the final training epoch.
    pub fn training_loss(&self) -> Option<T> {
        self.training_loss
    }

    fn logits(&self, features: &[usize]) -> Vec<T> {
        let l = self.labels.len();
        let mut z = vec![T::zero(); l];
        for &f in features {
            for (zk, &w) in z.iter_mut().zip(&self.weights[f * l..(f + 1) * l]) {
                *zk = *zk + w;
            }
        }
        z
    }

    /// Row `r` is the log-softmax over labels for token `r`.
    pub fn score_tokens<S: AsRef<str>>(&self, tokens: &[S], from_title: bool) -> ScoreMatrix<T> {
        let l = self.labels.len();
        let mut data = Vec::with_capacity(tokens.len() * l);
        for i in 0..tokens.len() {
            let feats = featurize(i, tokens, from_title, self.dim);
            data.extend(log_softmax(&self.logits(&feats)));
        }
        ScoreMatrix::new(tokens.len(), l, data).expect("log-softmax of finite weights is finite")
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<(), NerError> {
        let l = self.labels.len();
        let rows = self
            .weights
            .chunks(l)
            .enumerate()
            .filter(|(_, row)| row.iter().any(|w| *w != T::zero()))
            .map(|(f, row)| (f, row.to_vec()))
            .collect();
        let stored = StoredTagger {
            labels: self.labels.clone(),
            gamma: self.gamma,
            dim: self.dim,
            training_loss: self.training_loss,
            rows,
        };
        let json = serde_json::to_vec(&stored).map_err(|e| NerError::Format(e.to_string()))?;
        std::fs::write(path.as_ref(), json).map_err(|source| NerError::Io {
            path: path.as_ref().display().to_string(),
            source,
        })
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self, NerError> {
        let bytes = std::fs::read(path.as_ref()).map_err(|source| NerError::Io {
            path: path.as_ref().display().to_string(),
            source,
        })?;
        let stored: StoredTagger<T> =
            serde_json::from_slice(&bytes).map_err(|e| NerError::Format(e.to_string()))?;
        let mut model = Self::untrained(stored.labels, stored.gamma, stored.dim)?;
        let l = model.labels.len();
        for (f, row) in stored.rows {
            if f >= model.dim || row.len() != l || row.iter().any(|w| !w.is_finite()) {
                return Err(NerError::Format(format!("bad weight row {f}")));
            }
            model.weights[f * l..(f + 1) * l].copy_from_slice(&row);
        }
        model.training_loss = stored.training_loss;
        Ok(model)
    }
}

fn validate(data: &[LabeledSentence], labels: &LabelSet) -> Result<(), NerError> {
    let n_types = labels.types().len();
    for (i, s) in data.iter().enumerate() {
        if s.tokens.len() != s.labels.len() {
            return Err(NerError::LengthMismatch {
                expected: s.tokens.len(),
                got: s.labels.len(),
            });
        }
        let in_range = s.labels.iter().all(|l| match l {
            super::Label::O => true,
            super::Label::B(t) | super::Label::I(t) => *t < n_types,
        });
        if !in_range || !is_valid_bio(&s.labels) {
            return Err(NerError::InvalidBio { sentence: i });
        }
    }
    Ok(())
}

/// Per-token SGD on focal loss. Token visiting order is shuffled each epoch
/// from `config.seed`, so equal seeds give bit-identical weights.
pub fn train_tagger<T: Scalar>(
    data: &[LabeledSentence],
    labels: &LabelSet,
    config: &TaggerConfig,
) -> Result<TaggerModel<T>, NerError> {
    if data.iter().all(|s| s.tokens.is_empty()) {
        return Err(NerError::EmptyTrainingData);
    }
    if !(config.learning_rate > 0.0) {
        return Err(NerError::InvalidConfig("learning rate must be positive".into()));
    }
    validate(data, labels)?;
    let mut model = TaggerModel::untrained(labels.clone(), T::of(config.gamma), config.hash_dim)?;
    let l = labels.len();

    let mut examples: Vec<(Vec<usize>, usize)> = Vec::new();
    for s in data {
        for i in 0..s.tokens.len() {
            let feats = featurize(i, &s.tokens, s.from_title, config.hash_dim);
            examples.push((feats, labels.ordinal(s.labels[i])));
        }
    }
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let lr = T::of(config.learning_rate);
    let mut epoch_loss = None;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = T::zero();
        for &e in &order {
            let (feats, gold) = &examples[e];
            let probs = softmax(&model.logits(feats));
            let fl = focal_loss(&probs, *gold, model.gamma)?;
            total = total + fl.loss;
            for &f in feats {
                for (w, &g) in model.weights[f * l..(f + 1) * l].iter_mut().zip(&fl.grad) {
                    *w = *w - lr * g;
                }
            }
        }
        epoch_loss = Some(total / T::of(examples.len() as f64));
    }
    model.training_loss = epoch_loss;
    Ok(model)
}
