use super::RankError;
use crate::Scalar;

/// Area under the ROC curve: the probability that a random positive scores
/// above a random negative, ties counting one half.
pub fn auc<T: Scalar>(scores: &[T], labels: &[u8]) -> Result<f64, RankError> {
    if scores.len() != labels.len() {
        return Err(RankError::LengthMismatch {
            scores: scores.len(),
            labels: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(RankError::BadLabel(bad.to_string()));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(RankError::SingleClass);
    }
    if let Some(i) = scores.iter().position(|s| s.is_nan()) {
        return Err(RankError::Format(format!("score {i} is NaN")));
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("no NaN"));
    // Mann-Whitney U with midranks for ties
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i + 1;
        while j < idx.len() && scores[idx[j]] == scores[idx[i]] {
            j += 1;
        }
        let midrank = (i + j + 1) as f64 / 2.0;
        rank_sum_pos += midrank * idx[i..j].iter().filter(|&&k| labels[k] == 1).count() as f64;
        i = j;
    }
    let u = rank_sum_pos - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos as f64 * neg as f64))
}
