use super::NerError;
use crate::Scalar;

/// Smallest probability fed to `ln`.
pub const PROB_FLOOR: f64 = 1e-12;

pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn log_softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<T>().ln();
    logits.iter().map(|&z| z - lse).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FocalLoss<T> {
    pub loss: T,
    /// Gradient with respect to the logits that produced `probs`.
    pub grad: Vec<T>,
}

/// `-(1 - p)^gamma * ln p` on the gold-class probability `p`, with its
/// gradient through the softmax.
///
/// With `q = 1 - p`, `d loss / d p = gamma q^(gamma-1) ln p - q^gamma / p` and
/// `d p / d z_k = p (1[k = gold] - p_k)`.
pub fn focal_loss<T: Scalar>(probs: &[T], gold: usize, gamma: T) -> Result<FocalLoss<T>, NerError> {
    if !(gamma >= T::zero()) || !gamma.is_finite() {
        return Err(NerError::InvalidGamma(gamma.as_f64()));
    }
    if gold >= probs.len() {
        return Err(NerError::LengthMismatch {
            expected: probs.len(),
            got: gold + 1,
        });
    }
    let total: T = probs.iter().copied().sum();
    if (total - T::one()).abs() > T::of(1e-6) {
        return Err(NerError::NotNormalized(total.as_f64()));
    }
    let p = probs[gold].max(T::of(PROB_FLOOR)).min(T::one());
    let q = T::one() - p;
    let ln_p = p.ln();
    let loss = -q.powf(gamma) * ln_p;
    // scale = (d loss / d p) * p
    let focusing = if gamma == T::zero() || q == T::zero() {
        T::zero()
    } else {
        gamma * q.powf(gamma - T::one()) * p * ln_p
    };
    let scale = focusing - q.powf(gamma);
    let grad = probs
        .iter()
        .enumerate()
        .map(|(k, &pk)| {
            let indicator = if k == gold { T::one() } else { T::zero() };
            scale * (indicator - pk)
        })
        .collect();
    Ok(FocalLoss { loss, grad })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_zero_is_cross_entropy() {
        let fl = focal_loss(&[0.5, 0.5], 0, 0.0).unwrap();
        assert!((fl.loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((fl.grad[0] + 0.5).abs() < 1e-15);
        assert!((fl.grad[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn certain_prediction_has_zero_loss() {
        let fl = focal_loss(&[0.0, 1.0, 0.0], 1, 1.6).unwrap();
        assert_eq!(fl.loss, 0.0);
        assert!(fl.grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn gamma_1_6_at_half() {
        // 0.5^1.6 * ln 2
        let fl = focal_loss(&[0.5f64, 0.5], 0, 1.6).unwrap();
        assert!((fl.loss - 0.228_653_297_019_7).abs() < 1e-12, "{}", fl.loss);
    }

    #[test]
    fn zero_gold_probability_is_clamped() {
        let fl = focal_loss(&[1.0f64, 0.0], 1, 2.0).unwrap();
        assert!(fl.loss.is_finite());
        assert!((fl.loss - (-(PROB_FLOOR.ln()))).abs() < 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(focal_loss(&[0.5, 0.5], 0, -1.0), Err(NerError::InvalidGamma(_))));
        assert!(matches!(focal_loss(&[0.5, 0.6], 0, 1.0), Err(NerError::NotNormalized(_))));
        assert!(focal_loss(&[0.5, 0.5], 2, 1.0).is_err());
    }

    #[test]
    fn softmax_normalizes() {
        let p = softmax(&[1000.0f64, 1000.0, -1000.0]);
        assert!((p[0] - 0.5).abs() < 1e-12 && p[2] == 0.0);
        let lp = log_softmax(&[1.0f64, 2.0, 3.0]);
        let s: f64 = lp.iter().map(|v| v.exp()).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }
}
