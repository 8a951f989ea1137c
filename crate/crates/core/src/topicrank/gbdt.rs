//! Gradient boosted regression trees for binary classification.
//!
//! Boosting starts from the prior log-odds. Each round fits a depth-limited
//! tree to the log-loss pseudo-residuals `y - p` by variance reduction, and
//! each leaf takes the Newton step `sum(r) / sum(p (1 - p))`.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::N_FEATURES;
use super::{RankError, RankFeatures};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GbdtConfig {
    pub num_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_leaf_count: usize,
    /// Fraction of rows drawn (without replacement) for each tree.
    pub subsample: f64,
    pub seed: u64,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        GbdtConfig {
            num_trees: 100,
            max_depth: 3,
            learning_rate: 0.1,
            min_leaf_count: 5,
            subsample: 1.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub enum Node<T> {
    Leaf { value: T },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Tree<T> {
    /// Root is node 0.
    pub nodes: Vec<Node<T>>,
}

impl<T: Scalar> Tree<T> {
    pub fn predict(&self, x: &[T; N_FEATURES]) -> T {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { value } => return *value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk<T>(nodes: &[Node<T>], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GbdtModel<T> {
    pub trees: Vec<Tree<T>>,
    pub learning_rate: T,
    /// Prior log-odds.
    pub base_score: T,
}

fn sigmoid<T: Scalar>(z: T) -> T {
    T::one() / (T::one() + (-z).exp())
}

impl<T: Scalar> GbdtModel<T> {
    /// A model with no trees that always predicts `prior`.
    pub fn constant(prior: f64, learning_rate: f64) -> Self {
        let p = T::of(prior);
        GbdtModel {
            trees: Vec::new(),
            learning_rate: T::of(learning_rate),
            base_score: (p / (T::one() - p)).ln(),
        }
    }

    pub fn raw_score(&self, features: &RankFeatures<T>) -> T {
        let x = features.to_array();
        let sum: T = self.trees.iter().map(|t| t.predict(&x)).sum();
        self.base_score + self.learning_rate * sum
    }

    /// Probability of the positive class.
    pub fn score(&self, features: &RankFeatures<T>) -> T {
        sigmoid(self.raw_score(features))
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<(), RankError> {
        let json = serde_json::to_vec_pretty(self).map_err(|e| RankError::Format(e.to_string()))?;
        std::fs::write(path.as_ref(), json).map_err(|source| RankError::Io {
            path: path.as_ref().display().to_string(),
            source,
        })
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self, RankError> {
        let bytes = std::fs::read(path.as_ref()).map_err(|source| RankError::Io {
            path: path.as_ref().display().to_string(),
            source,
        })?;
        let model: Self = serde_json::from_slice(&bytes).map_err(|e| RankError::Format(e.to_string()))?;
        for t in &model.trees {
            for n in &t.nodes {
                if let Node::Split { feature, left, right, .. } = n {
                    if *feature >= N_FEATURES || *left >= t.nodes.len() || *right >= t.nodes.len() {
                        return Err(RankError::Format("tree references an invalid node".into()));
                    }
                }
            }
        }
        Ok(model)
    }
}

/// Probability in `[0, 1]` that the candidate is a good topic.
pub fn score_topic<T: Scalar>(model: &GbdtModel<T>, features: &RankFeatures<T>) -> T {
    model.score(features)
}

struct Builder<'a, T> {
    x: &'a [[T; N_FEATURES]],
    residual: &'a [T],
    hessian: &'a [T],
    max_depth: usize,
    min_leaf: usize,
    nodes: Vec<Node<T>>,
}

impl<T: Scalar> Builder<'_, T> {
    fn leaf_value(&self, rows: &[usize]) -> T {
        let r: T = rows.iter().map(|&i| self.residual[i]).sum();
        let h: T = rows.iter().map(|&i| self.hessian[i]).sum();
        r / h.max(T::of(1e-12))
    }

    fn best_split(&self, rows: &[usize]) -> Option<(usize, T, Vec<usize>, Vec<usize>)> {
        let n = rows.len();
        let total: T = rows.iter().map(|&i| self.residual[i]).sum();
        let parent = total * total / T::of(n as f64);
        let mut best: Option<(T, usize, usize, Vec<usize>)> = None;
        for f in 0..N_FEATURES {
            let mut sorted = rows.to_vec();
            sorted.sort_by(|&a, &b| {
                self.x[a][f]
                    .partial_cmp(&self.x[b][f])
                    .expect("finite features")
                    .then(a.cmp(&b))
            });
            let mut left_sum = T::zero();
            for k in 1..n {
                left_sum = left_sum + self.residual[sorted[k - 1]];
                if k < self.min_leaf || n - k < self.min_leaf {
                    continue;
                }
                if self.x[sorted[k - 1]][f] == self.x[sorted[k]][f] {
                    continue;
                }
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / T::of(k as f64)
                    + right_sum * right_sum / T::of((n - k) as f64)
                    - parent;
                if gain > T::of(1e-12) && best.as_ref().is_none_or(|(g, ..)| gain > *g) {
                    best = Some((gain, f, k, sorted.clone()));
                }
            }
        }
        best.map(|(_, f, k, sorted)| {
            let threshold = (self.x[sorted[k - 1]][f] + self.x[sorted[k]][f]) / T::of(2.0);
            let mut left = sorted[..k].to_vec();
            let mut right = sorted[k..].to_vec();
            left.sort_unstable();
            right.sort_unstable();
            (f, threshold, left, right)
        })
    }

    fn build(&mut self, rows: &[usize], depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: T::zero() });
        let split = if depth < self.max_depth && rows.len() >= 2 * self.min_leaf {
            self.best_split(rows)
        } else {
            None
        };
        self.nodes[id] = match split {
            None => Node::Leaf {
                value: self.leaf_value(rows),
            },
            Some((feature, threshold, l, r)) => {
                let left = self.build(&l, depth + 1);
                let right = self.build(&r, depth + 1);
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                }
            }
        };
        id
    }
}

pub fn train_gbdt<T: Scalar>(rows: &[(RankFeatures<T>, u8)], config: &GbdtConfig) -> Result<GbdtModel<T>, RankError> {
    if let Some((_, bad)) = rows.iter().find(|(_, y)| *y > 1) {
        return Err(RankError::BadLabel(bad.to_string()));
    }
    let pos = rows.iter().filter(|(_, y)| *y == 1).count();
    if pos == 0 || pos == rows.len() {
        return Err(RankError::SingleClass);
    }
    if !(config.learning_rate > 0.0) || !(config.subsample > 0.0 && config.subsample <= 1.0) {
        return Err(RankError::InvalidConfig(
            "learning_rate must be > 0 and subsample in (0, 1]".into(),
        ));
    }
    let x: Vec<[T; N_FEATURES]> = rows.iter().map(|(f, _)| f.to_array()).collect();
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(RankError::Format("non-finite feature value".into()));
    }
    let y: Vec<T> = rows.iter().map(|(_, l)| T::of(f64::from(*l))).collect();
    let mut model = GbdtModel::constant(pos as f64 / rows.len() as f64, config.learning_rate);
    let mut raw = vec![model.base_score; rows.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let sample_size = ((rows.len() as f64 * config.subsample).round() as usize).max(1);
    let mut all: Vec<usize> = (0..rows.len()).collect();
    let min_leaf = config.min_leaf_count.max(1);

    for _ in 0..config.num_trees {
        let p: Vec<T> = raw.iter().map(|&z| sigmoid(z)).collect();
        let residual: Vec<T> = y.iter().zip(&p).map(|(&y, &p)| y - p).collect();
        let hessian: Vec<T> = p.iter().map(|&p| p * (T::one() - p)).collect();
        let mut sample = if sample_size < rows.len() {
            all.shuffle(&mut rng);
            all[..sample_size].to_vec()
        } else {
            all.clone()
        };
        sample.sort_unstable();
        let mut builder = Builder {
            x: &x,
            residual: &residual,
            hessian: &hessian,
            max_depth: config.max_depth,
            min_leaf,
            nodes: Vec::new(),
        };
        builder.build(&sample, 0);
        let tree = Tree { nodes: builder.nodes };
        for (z, xi) in raw.iter_mut().zip(&x) {
            *z = *z + model.learning_rate * tree.predict(xi);
        }
        model.trees.push(tree);
    }
    Ok(model)
}

/// Stratified k-fold cross validation; returns one validation AUC per fold.
pub fn cross_validate_auc<T: Scalar>(
    rows: &[(RankFeatures<T>, u8)],
    config: &GbdtConfig,
    folds: usize,
) -> Result<Vec<f64>, RankError> {
    if folds < 2 {
        return Err(RankError::InvalidConfig("need at least 2 folds".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut fold_of = vec![0usize; rows.len()];
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].1 == class).collect();
        if idx.len() < folds {
            return Err(RankError::InvalidConfig(format!(
                "class {class} has fewer rows than folds"
            )));
        }
        idx.shuffle(&mut rng);
        for (k, i) in idx.into_iter().enumerate() {
            fold_of[i] = k % folds;
        }
    }
    (0..folds)
        .map(|k| {
            let train: Vec<_> = (0..rows.len()).filter(|&i| fold_of[i] != k).map(|i| rows[i]).collect();
            let valid: Vec<_> = (0..rows.len()).filter(|&i| fold_of[i] == k).map(|i| rows[i]).collect();
            let model = train_gbdt(&train, config)?;
            let scores: Vec<T> = valid.iter().map(|(f, _)| model.score(f)).collect();
            let labels: Vec<u8> = valid.iter().map(|(_, y)| *y).collect();
            super::auc(&scores, &labels)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows() -> Vec<(RankFeatures<f64>, u8)> {
        (0..40)
            .map(|i| {
                let good = i % 2 == 0;
                let ner = 10 + i as u64;
                let doc = if good { ner / 3 } else { ner };
                (RankFeatures::from_counts(ner, doc.max(1), 0), u8::from(good))
            })
            .collect()
    }

    #[test]
    fn zero_trees_predict_prior() {
        let cfg = GbdtConfig {
            num_trees: 0,
            ..Default::default()
        };
        let m = train_gbdt(&rows(), &cfg).unwrap();
        let f = RankFeatures::from_counts(3, 2, 1);
        assert!((m.score(&f) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_class_rejected() {
        let r: Vec<_> = rows().into_iter().filter(|(_, y)| *y == 1).collect();
        assert!(matches!(train_gbdt(&r, &GbdtConfig::default()), Err(RankError::SingleClass)));
    }

    #[test]
    fn depth_bounded_and_deterministic() {
        let cfg = GbdtConfig {
            num_trees: 10,
            max_depth: 2,
            min_leaf_count: 2,
            subsample: 0.7,
            seed: 9,
            ..Default::default()
        };
        let a = train_gbdt(&rows(), &cfg).unwrap();
        let b = train_gbdt(&rows(), &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.trees.iter().all(|t| t.depth() <= 2));
    }

    #[test]
    fn learns_ratio_split() {
        let m = train_gbdt(&rows(), &GbdtConfig { min_leaf_count: 2, ..Default::default() }).unwrap();
        let good = RankFeatures::from_counts(30, 10, 0);
        let noise = RankFeatures::from_counts(30, 30, 0);
        assert!(m.score(&good) > 0.9);
        assert!(m.score(&noise) < 0.1);
    }

    #[test]
    fn json_round_trip() {
        let m = train_gbdt(&rows(), &GbdtConfig { num_trees: 3, ..Default::default() }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.json");
        m.save_json(&p).unwrap();
        assert_eq!(GbdtModel::<f64>::load_json(&p).unwrap(), m);
    }
}
