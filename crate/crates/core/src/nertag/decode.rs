//! BIO-constrained decoding.
//!
//! Transitions are hard constraints: `I-t` may only follow `B-t` or `I-t`, and
//! never starts a sequence. There are no learned transition weights, so the
//! best valid path maximizes the plain sum of per-token scores.

use super::{Label, LabelSet, ScoreMatrix};
use crate::Scalar;

/// Sum of the chosen label's score at each position.
pub fn path_score<T: Scalar>(scores: &ScoreMatrix<T>, labels: &LabelSet, path: &[Label]) -> T {
    assert_eq!(path.len(), scores.rows());
    path.iter()
        .enumerate()
        .fold(T::zero(), |acc, (r, &l)| acc + scores.get(r, labels.ordinal(l)))
}

/// Highest-scoring BIO-valid label sequence.
///
/// Ties resolve to the smallest label ordinal at the latest position where
/// the tied paths differ.
pub fn viterbi_decode<T: Scalar>(scores: &ScoreMatrix<T>, labels: &LabelSet) -> Vec<Label> {
    let n = scores.rows();
    let l = labels.len();
    assert_eq!(scores.cols(), l, "score columns must match the label set");
    if n == 0 {
        return Vec::new();
    }
    let neg_inf = T::neg_infinity();
    let mut delta: Vec<T> = (0..l)
        .map(|k| match labels.label(k) {
            Label::I(_) => neg_inf,
            _ => scores.get(0, k),
        })
        .collect();
    let mut next = vec![neg_inf; l];
    let mut back = vec![0usize; n * l];

    for t in 1..n {
        // O and B-* may follow anything; strict `>` keeps the smallest ordinal
        let (mut free_arg, mut free_best) = (0, delta[0]);
        for (p, &v) in delta.iter().enumerate().skip(1) {
            if v > free_best {
                free_best = v;
                free_arg = p;
            }
        }
        let row = scores.row(t);
        for k in 0..l {
            let (arg, best) = match labels.label(k) {
                Label::I(ty) => {
                    let b = labels.ordinal(Label::B(ty));
                    let i = labels.ordinal(Label::I(ty));
                    if delta[i] > delta[b] {
                        (i, delta[i])
                    } else {
                        (b, delta[b])
                    }
                }
                _ => (free_arg, free_best),
            };
            back[t * l + k] = arg;
            next[k] = best + row[k];
        }
        std::mem::swap(&mut delta, &mut next);
    }

    let mut cur = 0;
    for k in 1..l {
        if delta[k] > delta[cur] {
            cur = k;
        }
    }
    let mut path = vec![Label::O; n];
    for t in (0..n).rev() {
        path[t] = labels.label(cur);
        if t > 0 {
            cur = back[t * l + cur];
        }
    }
    path
}

/// Per-token argmax, then every `I-t` that does not continue a run of type
/// `t` is rewritten to `O`.
pub fn greedy_decode<T: Scalar>(scores: &ScoreMatrix<T>, labels: &LabelSet) -> Vec<Label> {
    assert_eq!(scores.cols(), labels.len(), "score columns must match the label set");
    let mut prev = Label::O;
    (0..scores.rows())
        .map(|r| {
            let row = scores.row(r);
            let mut best = 0;
            for k in 1..row.len() {
                if row[k] > row[best] {
                    best = k;
                }
            }
            let mut label = labels.label(best);
            if !LabelSet::allowed(prev, label) {
                label = Label::O;
            }
            prev = label;
            label
        })
        .collect()
}
