//! Scalar loss terms shared by training and evaluation.

use crate::error::LossError;

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` before any log.
pub const PROB_EPS: f64 = 1e-7;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn clamp_prob(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Binary cross-entropy of one prediction against a target in `[0, 1]`.
#[inline]
pub fn bce(p: f64, target: f64) -> f64 {
    let p = clamp_prob(p);
    -(target * p.ln() + (1.0 - target) * (1.0 - p).ln())
}

/// Mean binary cross-entropy; used for both the label and the sensitive
/// attribute losses.
pub fn mean_bce(probs: &[f64], targets: &[f64]) -> Result<f64, LossError> {
    if probs.len() != targets.len() {
        return Err(LossError::LengthMismatch(probs.len(), targets.len()));
    }
    if probs.is_empty() {
        return Err(LossError::EmptyNodeSet("labeled"));
    }
    Ok(probs.iter().zip(targets).map(|(&p, &t)| bce(p, t)).sum::<f64>() / probs.len() as f64)
}

/// Population covariance `E[(s - E s)(y - E y)]`, signed.
pub fn covariance(s: &[f64], y: &[f64]) -> Result<f64, LossError> {
    if s.len() != y.len() {
        return Err(LossError::LengthMismatch(s.len(), y.len()));
    }
    if s.len() < 2 {
        return Err(LossError::TooShort(s.len()));
    }
    let m = s.len() as f64;
    let s_mean = s.iter().sum::<f64>() / m;
    let y_mean = y.iter().sum::<f64>() / m;
    Ok(s.iter()
        .zip(y)
        .map(|(a, b)| (a - s_mean) * (b - y_mean))
        .sum::<f64>()
        / m)
}

/// The adversarial objective: mean `log f_A` over group 1 plus mean
/// `log(1 - f_A)` over group 0. Always `<= 0`.
pub fn adversary_objective(adv_probs: &[f64], groups: &[u8]) -> Result<f64, LossError> {
    if adv_probs.len() != groups.len() {
        return Err(LossError::LengthMismatch(adv_probs.len(), groups.len()));
    }
    let (mut sum1, mut n1, mut sum0, mut n0) = (0.0, 0usize, 0.0, 0usize);
    for (&p, &g) in adv_probs.iter().zip(groups) {
        let p = clamp_prob(p);
        if g == 1 {
            sum1 += p.ln();
            n1 += 1;
        } else {
            sum0 += (1.0 - p).ln();
            n0 += 1;
        }
    }
    if n1 == 0 {
        return Err(LossError::EmptyGroup(1));
    }
    if n0 == 0 {
        return Err(LossError::EmptyGroup(0));
    }
    Ok(sum1 / n1 as f64 + sum0 / n0 as f64)
}
