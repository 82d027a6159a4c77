use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::GraphError;
use crate::rng::{self, Stream};

/// Fractions controlling [`split_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    /// Share of labeled nodes used for training.
    pub train_fraction: f64,
    /// Share of the held-out nodes reserved for validation; the rest is test.
    pub val_fraction: f64,
    /// Share of the training nodes placed in the forget set.
    pub forget_fraction: f64,
    /// Share of nodes with a known sensitive attribute exposed to the estimator.
    pub sensitive_known_fraction: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_fraction: 0.8,
            val_fraction: 0.0,
            forget_fraction: 0.05,
            sensitive_known_fraction: 0.3,
        }
    }
}

/// Node index sets for one experiment. All vectors are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitMasks {
    pub train_ids: Vec<usize>,
    pub val_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
    pub sensitive_known_ids: Vec<usize>,
    pub forget_ids: Vec<usize>,
}

impl SplitMasks {
    /// Training nodes that are not being forgotten.
    pub fn retain_ids(&self) -> Vec<usize> {
        self.train_ids
            .iter()
            .copied()
            .filter(|v| self.forget_ids.binary_search(v).is_err())
            .collect()
    }

    /// Checks disjointness and containment against a graph of `n` nodes.
    pub fn validate(&self, n: usize) -> Result<(), GraphError> {
        let sets = [
            ("train", &self.train_ids),
            ("val", &self.val_ids),
            ("test", &self.test_ids),
            ("sensitive_known", &self.sensitive_known_ids),
            ("forget", &self.forget_ids),
        ];
        for (name, ids) in sets {
            if !ids.windows(2).all(|w| w[0] < w[1]) {
                return Err(GraphError::InvalidMasks(format!(
                    "{name} ids are not sorted and unique"
                )));
            }
            if let Some(&bad) = ids.iter().find(|&&v| v >= n) {
                return Err(GraphError::InvalidMasks(format!(
                    "{name} contains node {bad} outside a graph of {n} nodes"
                )));
            }
        }
        let overlaps = |a: &[usize], b: &[usize]| a.iter().any(|v| b.binary_search(v).is_ok());
        if overlaps(&self.train_ids, &self.test_ids)
            || overlaps(&self.train_ids, &self.val_ids)
            || overlaps(&self.val_ids, &self.test_ids)
        {
            return Err(GraphError::InvalidMasks(
                "train, val and test sets overlap".into(),
            ));
        }
        if let Some(v) = self
            .forget_ids
            .iter()
            .find(|v| self.train_ids.binary_search(v).is_err())
        {
            return Err(GraphError::InvalidMasks(format!(
                "forget node {v} is not a training node"
            )));
        }
        Ok(())
    }

    pub fn with_forget(mut self, mut forget: Vec<usize>) -> Self {
        forget.sort_unstable();
        forget.dedup();
        self.forget_ids = forget;
        self
    }
}

fn check_fraction(name: &'static str, value: f64, allow_zero: bool) -> Result<(), GraphError> {
    let ok = if allow_zero {
        (0.0..=1.0).contains(&value)
    } else {
        value > 0.0 && value <= 1.0
    };
    if ok {
        Ok(())
    } else {
        Err(GraphError::InvalidParameter {
            name,
            value,
            range: if allow_zero { "[0, 1]" } else { "(0, 1]" },
        })
    }
}

fn take_sorted(mut ids: Vec<usize>) -> Vec<usize> {
    ids.sort_unstable();
    ids
}

/// Random train/val/test split over the labeled nodes, a forget set drawn
/// from the training nodes and a known-sensitive set drawn from the nodes
/// with a sensitive attribute. Deterministic in `seed`.
pub fn split_dataset(graph: &Graph, spec: &SplitSpec, seed: u64) -> Result<SplitMasks, GraphError> {
    check_fraction("train_fraction", spec.train_fraction, false)?;
    check_fraction("forget_fraction", spec.forget_fraction, false)?;
    check_fraction("sensitive_known_fraction", spec.sensitive_known_fraction, false)?;
    check_fraction("val_fraction", spec.val_fraction, true)?;

    let mut labeled: Vec<usize> = (0..graph.num_nodes())
        .filter(|&v| graph.label(v).is_some())
        .collect();
    labeled.shuffle(&mut rng::stream(seed, Stream::Split));

    let n_train = (spec.train_fraction * labeled.len() as f64).round() as usize;
    let (train, held_out) = labeled.split_at(n_train.min(labeled.len()));
    let n_val = (spec.val_fraction * held_out.len() as f64).round() as usize;
    let (val, test) = held_out.split_at(n_val.min(held_out.len()));
    if train.is_empty() {
        return Err(GraphError::EmptySplit("train"));
    }
    if test.is_empty() {
        return Err(GraphError::EmptySplit("test"));
    }

    let mut train_pool = take_sorted(train.to_vec());
    train_pool.shuffle(&mut rng::stream(seed, Stream::Forget));
    let n_forget = (spec.forget_fraction * train.len() as f64).round() as usize;
    let forget = take_sorted(train_pool[..n_forget].to_vec());

    let mut known: Vec<usize> = (0..graph.num_nodes())
        .filter(|&v| graph.sensitive()[v].is_some())
        .collect();
    known.shuffle(&mut rng::stream(seed, Stream::SensitiveKnown));
    let n_known = (spec.sensitive_known_fraction * known.len() as f64).round() as usize;
    known.truncate(n_known);

    Ok(SplitMasks {
        train_ids: take_sorted(train.to_vec()),
        val_ids: take_sorted(val.to_vec()),
        test_ids: take_sorted(test.to_vec()),
        sensitive_known_ids: take_sorted(known),
        forget_ids: forget,
    })
}
