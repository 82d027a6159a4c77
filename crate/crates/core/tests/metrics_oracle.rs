//! Fairness metrics against direct counting, and AUC invariances.

mod common;

use common::{binary_vectors, brute_eo, brute_sp};
use fair_unlearn::metrics::{equal_opportunity, roc_auc, statistical_parity};
use proptest::prelude::*;

#[test]
fn parity_and_opportunity_match_counting_up_to_length_six() {
    for n in 2..=6 {
        for groups in binary_vectors(n).filter(|g| g.contains(&0) && g.contains(&1)) {
            for preds in binary_vectors(n) {
                assert_eq!(statistical_parity(&preds, &groups).unwrap(), brute_sp(&preds, &groups));
                for labels in binary_vectors(n) {
                    match brute_eo(&preds, &labels, &groups) {
                        Some(eo) => assert_eq!(equal_opportunity(&preds, &labels, &groups).unwrap(), eo),
                        None => assert!(equal_opportunity(&preds, &labels, &groups).is_err()),
                    }
                }
            }
        }
    }
}

fn swap(groups: &[u8]) -> Vec<u8> {
    groups.iter().map(|g| 1 - g).collect()
}

proptest! {
    #[test]
    fn metrics_ignore_group_naming(
        rows in prop::collection::vec((0u8..2, 0u8..2, 0u8..2), 4..60)
    ) {
        let preds: Vec<u8> = rows.iter().map(|r| r.0).collect();
        let labels: Vec<u8> = rows.iter().map(|r| r.1).collect();
        let groups: Vec<u8> = rows.iter().map(|r| r.2).collect();
        prop_assert_eq!(
            statistical_parity(&preds, &groups).ok(),
            statistical_parity(&preds, &swap(&groups)).ok()
        );
        prop_assert_eq!(
            equal_opportunity(&preds, &labels, &groups).ok(),
            equal_opportunity(&preds, &labels, &swap(&groups)).ok()
        );
    }

    #[test]
    fn auc_ignores_monotone_rescaling(
        rows in prop::collection::vec((-5.0f64..5.0, any::<bool>()), 2..80),
        scale in 0.1f64..10.0,
        shift in -3.0f64..3.0,
    ) {
        prop_assume!(rows.iter().any(|r| r.1) && rows.iter().any(|r| !r.1));
        let scores: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let positive: Vec<bool> = rows.iter().map(|r| r.1).collect();
        let base = roc_auc(&scores, &positive).unwrap();
        let moved: Vec<f64> = scores.iter().map(|s| scale * s + shift).collect();
        let squashed: Vec<f64> = scores.iter().map(|s| 1.0 / (1.0 + (-s).exp())).collect();
        prop_assert!((roc_auc(&moved, &positive).unwrap() - base).abs() < 1e-12);
        prop_assert!((roc_auc(&squashed, &positive).unwrap() - base).abs() < 1e-12);
        let flipped: Vec<bool> = positive.iter().map(|p| !p).collect();
        prop_assert!((roc_auc(&scores, &flipped).unwrap() - (1.0 - base)).abs() < 1e-12);
    }

    #[test]
    fn auc_matches_pair_counting(
        rows in prop::collection::vec((0u8..6, any::<bool>()), 2..40),
    ) {
        prop_assume!(rows.iter().any(|r| r.1) && rows.iter().any(|r| !r.1));
        let scores: Vec<f64> = rows.iter().map(|r| f64::from(r.0)).collect();
        let positive: Vec<bool> = rows.iter().map(|r| r.1).collect();
        let (mut wins, mut pairs) = (0.0, 0.0);
        for i in (0..scores.len()).filter(|&i| positive[i]) {
            for j in (0..scores.len()).filter(|&j| !positive[j]) {
                pairs += 1.0;
                wins += if scores[i] > scores[j] { 1.0 } else if scores[i] == scores[j] { 0.5 } else { 0.0 };
            }
        }
        prop_assert!((roc_auc(&scores, &positive).unwrap() - wins / pairs).abs() < 1e-12);
    }
}
