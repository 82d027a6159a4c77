//! Group fairness, accuracy and the membership-inference audit.
//!
//! Predictions are thresholded at 0.5. Fairness is always measured against
//! the true sensitive attribute.

mod mia;

pub use mia::{
    attack_features, roc_auc, AttackModel, MiaResult, ShadowAttack, ShadowConfig, ATTACK_FEATURES,
};

use serde::{Deserialize, Serialize};

use crate::error::{MetricError, Result};
use crate::nn::{classifier_forward, ClassifierParams, GraphContext};

fn check_len(a: usize, b: usize) -> Result<(), MetricError> {
    if a != b {
        return Err(MetricError::LengthMismatch(a, b));
    }
    Ok(())
}

fn positive_rate(preds: &[u8], mask: impl Fn(usize) -> bool) -> Option<f64> {
    let (mut pos, mut total) = (0usize, 0usize);
    for (i, &p) in preds.iter().enumerate() {
        if mask(i) {
            total += 1;
            pos += usize::from(p == 1);
        }
    }
    (total > 0).then(|| pos as f64 / total as f64)
}

/// `|P(ŷ=1 | s=0) − P(ŷ=1 | s=1)|`.
pub fn statistical_parity(preds: &[u8], groups: &[u8]) -> Result<f64, MetricError> {
    check_len(preds.len(), groups.len())?;
    let rate = |g: u8| {
        positive_rate(preds, |i| groups[i] == g).ok_or_else(|| MetricError::Undefined {
            metric: "statistical parity",
            reason: format!("no node with s = {g}"),
        })
    };
    Ok((rate(0)? - rate(1)?).abs())
}

/// `|P(ŷ=1 | y=1, s=0) − P(ŷ=1 | y=1, s=1)|`.
pub fn equal_opportunity(preds: &[u8], labels: &[u8], groups: &[u8]) -> Result<f64, MetricError> {
    check_len(preds.len(), labels.len())?;
    check_len(preds.len(), groups.len())?;
    let rate = |g: u8| {
        positive_rate(preds, |i| groups[i] == g && labels[i] == 1).ok_or_else(|| {
            MetricError::Undefined {
                metric: "equal opportunity",
                reason: format!("no node with y = 1 and s = {g}"),
            }
        })
    };
    Ok((rate(0)? - rate(1)?).abs())
}

pub fn accuracy(preds: &[u8], labels: &[u8]) -> Result<f64, MetricError> {
    check_len(preds.len(), labels.len())?;
    if preds.is_empty() {
        return Err(MetricError::Empty("evaluation set"));
    }
    let hits = preds.iter().zip(labels).filter(|(p, y)| p == y).count();
    Ok(hits as f64 / preds.len() as f64)
}

/// Hard predictions at threshold 0.5.
pub fn hard_predictions(probs: &[f64]) -> Vec<u8> {
    probs.iter().map(|&p| u8::from(p >= 0.5)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessReport {
    pub accuracy: f64,
    pub delta_sp: f64,
    pub delta_eo: f64,
    /// Node counts indexed `[s][y]`.
    pub group_counts: [[usize; 2]; 2],
}

impl FairnessReport {
    pub fn evaluated(&self) -> usize {
        self.group_counts.iter().flatten().sum()
    }
}

pub fn fairness_report(preds: &[u8], labels: &[u8], groups: &[u8]) -> Result<FairnessReport, MetricError> {
    check_len(preds.len(), labels.len())?;
    check_len(preds.len(), groups.len())?;
    let mut group_counts = [[0; 2]; 2];
    for (&y, &s) in labels.iter().zip(groups) {
        group_counts[usize::from(s == 1)][usize::from(y == 1)] += 1;
    }
    Ok(FairnessReport {
        accuracy: accuracy(preds, labels)?,
        delta_sp: statistical_parity(preds, groups)?,
        delta_eo: equal_opportunity(preds, labels, groups)?,
        group_counts,
    })
}

/// Scores the classifier on `nodes` of `ctx`. Nodes without a label or a
/// known sensitive attribute are skipped.
pub fn evaluate_classifier(
    params: &ClassifierParams,
    ctx: &GraphContext,
    nodes: &[usize],
) -> Result<FairnessReport> {
    let cache = classifier_forward(params, ctx)?;
    let graph = ctx.graph();
    let (mut preds, mut labels, mut groups) = (Vec::new(), Vec::new(), Vec::new());
    for &v in nodes {
        if let (Some(y), Some(s)) = (graph.label(v), graph.sensitive()[v]) {
            preds.push(u8::from(cache.probs[v] >= 0.5));
            labels.push(y);
            groups.push(s);
        }
    }
    Ok(fairness_report(&preds, &labels, &groups)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        assert_eq!(statistical_parity(&[1, 0, 1, 1], &[0, 0, 1, 1]).unwrap(), 0.5);
        assert_eq!(statistical_parity(&[1, 0, 1, 0], &[0, 0, 1, 1]).unwrap(), 0.0);
        assert_eq!(
            equal_opportunity(&[1, 0, 1, 0], &[1, 1, 1, 1], &[0, 0, 1, 1]).unwrap(),
            0.0
        );
        assert_eq!(
            equal_opportunity(&[1, 1, 0, 1], &[1, 1, 1, 1], &[0, 0, 1, 1]).unwrap(),
            0.5
        );
        let y = [1, 0, 1, 1, 0];
        assert_eq!(equal_opportunity(&y, &y, &[0, 1, 1, 0, 1]).unwrap(), 0.0);
        assert_eq!(accuracy(&y, &y).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 1, 0, 0, 1], &y).unwrap(), 0.0);
        assert_eq!(accuracy(&[1, 0, 1, 0], &[1, 0, 1, 1]).unwrap(), 0.75);
    }

    #[test]
    fn undefined_cases_are_errors() {
        assert!(matches!(
            statistical_parity(&[1, 0], &[1, 1]),
            Err(MetricError::Undefined { .. })
        ));
        assert!(matches!(
            equal_opportunity(&[1, 0], &[1, 0], &[0, 1]),
            Err(MetricError::Undefined { .. })
        ));
        assert_eq!(accuracy(&[], &[]), Err(MetricError::Empty("evaluation set")));
        assert_eq!(accuracy(&[1], &[]), Err(MetricError::LengthMismatch(1, 0)));
    }

    #[test]
    fn report_counts_cells() {
        let r = fairness_report(&[1, 0, 1, 1], &[1, 0, 1, 0], &[0, 0, 1, 1]).unwrap();
        assert_eq!(r.group_counts, [[1, 1], [1, 1]]);
        assert_eq!(r.evaluated(), 4);
        assert_eq!(r.accuracy, 0.75);
    }
}
