use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::nertag::{greedy_decode, is_valid_bio, path_score, viterbi_decode, Label, LabelSet, ScoreMatrix};

/// Best valid path by enumeration; exponential, for checking only.
pub fn brute_force_decode(scores: &ScoreMatrix<f64>, labels: &LabelSet) -> Vec<Label> {
    let (n, l) = (scores.rows(), scores.cols());
    let mut best: Option<(f64, Vec<Label>)> = None;
    let mut idx = vec![0usize; n];
    loop {
        let path: Vec<Label> = idx.iter().map(|&o| labels.label(o)).collect();
        if is_valid_bio(&path) {
            let s = path_score(scores, labels, &path);
            if best.as_ref().is_none_or(|(b, _)| s > *b) {
                best = Some((s, path));
            }
        }
        let mut pos = n;
        loop {
            if pos == 0 {
                return best.map(|b| b.1).unwrap_or_default();
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < l {
                break;
            }
            idx[pos] = 0;
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ViterbiReport {
    pub optimality_cases: usize,
    pub optimality_failures: usize,
    pub validity_cases: usize,
    pub invalid_outputs: usize,
    pub dominated_by_greedy: usize,
}

impl ViterbiReport {
    pub fn passed(&self) -> bool {
        self.optimality_failures == 0 && self.invalid_outputs == 0 && self.dominated_by_greedy == 0
    }
}

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ScoreMatrix<f64> {
    let data = (0..rows * cols).map(|_| rng.random_range(-3.0..3.0)).collect();
    ScoreMatrix::new(rows, cols, data).expect("finite scores")
}

/// Exact optimality against enumeration on small matrices, then validity
/// and dominance over greedy decoding on larger ones.
pub fn viterbi_suite(optimality_cases: usize, validity_cases: usize, seed: u64) -> ViterbiReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let small = LabelSet::new(["a", "b"]).expect("two types");
    let mut optimality_failures = 0;
    for _ in 0..optimality_cases {
        let n = rng.random_range(1..=7);
        let m = random_matrix(&mut rng, n, small.len());
        let v = viterbi_decode(&m, &small);
        let b = brute_force_decode(&m, &small);
        if (path_score(&m, &small, &v) - path_score(&m, &small, &b)).abs() > 1e-9 || !is_valid_bio(&v) {
            optimality_failures += 1;
        }
    }
    let large = LabelSet::new(crate::nertag::DEFAULT_ENTITY_TYPES.iter().copied()).expect("default types");
    let (mut invalid_outputs, mut dominated_by_greedy) = (0, 0);
    for _ in 0..validity_cases {
        let n = rng.random_range(1..=30);
        let m = random_matrix(&mut rng, n, large.len());
        let v = viterbi_decode(&m, &large);
        if !is_valid_bio(&v) || v.len() != n {
            invalid_outputs += 1;
        }
        let g = greedy_decode(&m, &large);
        if path_score(&m, &large, &v) + 1e-9 < path_score(&m, &large, &g) {
            dominated_by_greedy += 1;
        }
    }
    ViterbiReport {
        optimality_cases,
        optimality_failures,
        validity_cases,
        invalid_outputs,
        dominated_by_greedy,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suite_passes() {
        let r = viterbi_suite(50, 50, 1);
        assert!(r.passed(), "{r:?}");
    }

    #[test]
    fn brute_force_respects_bio() {
        let ls = LabelSet::new(["a"]).unwrap();
        // I-a scores highest everywhere but cannot start a sentence
        let m = ScoreMatrix::from_rows(&[vec![0.0, 0.0, 5.0], vec![0.0, 0.0, 5.0]]).unwrap();
        let p = brute_force_decode(&m, &ls);
        assert_eq!(p, vec![Label::B(0), Label::I(0)]);
    }
}
