//! Fairness-aware training of the GCN classifier.
//!
//! Each epoch refreshes the estimated sensitive attributes, takes one
//! generator step for the classifier and the estimator with the adversary
//! fixed, then takes one or more ascent steps on the adversary's
//! log-likelihood `L_A` with the generator fixed. The generator descends
//! `L_C + L_E + α·L_R + β·L_A`, i.e. it is rewarded for the adversary's
//! cross-entropy.

use std::io::Write;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, LossError, Result};
use crate::graph::SplitMasks;
use crate::nn::{
    adversary_logits, loss, Adam, AdversaryParams, EstimatorParams, GraphContext, LossTerms,
    LossWeights, ModelDims, ModelParams, Objective,
};

/// Mean binary cross-entropy of predicted probabilities against 0/1 labels.
pub fn classification_loss(probs: &[f64], labels: &[u8]) -> Result<f64, LossError> {
    if probs.len() != labels.len() {
        return Err(LossError::LengthMismatch(probs.len(), labels.len()));
    }
    if probs.is_empty() {
        return Err(LossError::EmptyNodeSet("labeled"));
    }
    let targets: Vec<f64> = labels.iter().map(|&y| f64::from(y)).collect();
    loss::mean_bce(probs, &targets)
}

/// Adversary objective for representations `h` (one row per node) split by
/// the hard estimated attribute `groups`.
pub fn adversary_loss(h: &Array2<f64>, groups: &[u8], adversary: &AdversaryParams) -> Result<f64, LossError> {
    if h.nrows() != groups.len() {
        return Err(LossError::LengthMismatch(h.nrows(), groups.len()));
    }
    let nodes: Vec<usize> = (0..h.nrows()).collect();
    let logits = adversary_logits(adversary, h, &nodes)
        .map_err(|_| LossError::LengthMismatch(h.ncols(), adversary.weight.len()))?;
    let probs: Vec<f64> = logits.into_iter().map(loss::sigmoid).collect();
    loss::adversary_objective(&probs, groups)
}

/// `|Cov(ŝ, ŷ)|` over aligned vectors of estimated sensitive probabilities
/// and predicted probabilities.
pub fn covariance_penalty(s: &[f64], y: &[f64]) -> Result<f64, LossError> {
    loss::covariance(s, y).map(f64::abs)
}

/// Which nodes enter the adversary and covariance terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdversaryScope {
    AllNodes,
    TrainNodes,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessHyperparams {
    /// Covariance weight.
    pub alpha: f64,
    /// Adversary weight.
    pub beta: f64,
    pub epochs: usize,
    pub adversary_steps_per_epoch: usize,
    pub lr_classifier: f64,
    pub lr_estimator: f64,
    pub lr_adversary: f64,
    /// Keep the estimator at its pre-trained values.
    pub freeze_estimator: bool,
    /// Stop after this many epochs without validation improvement; `0`
    /// disables early stopping. Needs a non-empty validation set.
    pub patience: usize,
    pub adversary_scope: AdversaryScope,
}

impl Default for FairnessHyperparams {
    fn default() -> Self {
        FairnessHyperparams {
            alpha: 0.5,
            beta: 10.0,
            epochs: 1000,
            adversary_steps_per_epoch: 1,
            lr_classifier: 1e-3,
            lr_estimator: 1e-3,
            lr_adversary: 1e-3,
            freeze_estimator: false,
            patience: 100,
            adversary_scope: AdversaryScope::AllNodes,
        }
    }
}

impl FairnessHyperparams {
    pub fn validate(&self) -> Result<()> {
        let bad = |name: &str, v: f64| Error::Config(format!("{name} = {v} is out of range"));
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(bad("alpha", self.alpha));
        }
        if !(self.beta >= 0.0 && self.beta.is_finite()) {
            return Err(bad("beta", self.beta));
        }
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be at least 1".into()));
        }
        for (name, lr) in [
            ("lr_classifier", self.lr_classifier),
            ("lr_estimator", self.lr_estimator),
            ("lr_adversary", self.lr_adversary),
        ] {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(bad(name, lr));
            }
        }
        Ok(())
    }
}

/// Loss components recorded before the generator step of one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub classification: f64,
    pub estimator: f64,
    pub covariance: f64,
    /// `0` when the adversary is inactive.
    pub adversary: f64,
    pub adversary_active: bool,
    pub val_acc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub params: ModelParams,
    pub log: Vec<EpochLog>,
    pub seed: u64,
    pub stopped_early: bool,
}

impl TrainedModel {
    /// Per-epoch CSV: `epoch,L_C,L_E,L_R,L_A,val_acc,adversary_active`.
    pub fn log_csv(&self) -> String {
        let mut out = String::from("epoch,L_C,L_E,L_R,L_A,val_acc,adversary_active\n");
        for e in &self.log {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                e.epoch,
                e.classification,
                e.estimator,
                e.covariance,
                e.adversary,
                e.val_acc,
                u8::from(e.adversary_active)
            ));
        }
        out
    }

    pub fn write_log(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        file.write_all(self.log_csv().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

fn fairness_nodes(ctx: &GraphContext, masks: &SplitMasks, scope: AdversaryScope) -> Vec<usize> {
    match scope {
        AdversaryScope::AllNodes => (0..ctx.num_nodes()).collect(),
        AdversaryScope::TrainNodes => masks.train_ids.clone(),
    }
}

fn accuracy_at(probs: &ndarray::Array1<f64>, ctx: &GraphContext, nodes: &[usize]) -> f64 {
    let hits = nodes
        .iter()
        .filter(|&&v| u8::from(probs[v] >= 0.5) == ctx.graph().label(v).unwrap_or(2))
        .count();
    hits as f64 / nodes.len().max(1) as f64
}

fn check_terms(epoch: usize, terms: &LossTerms) -> Result<()> {
    let named = [
        ("L_C", terms.classification),
        ("L_E", terms.estimator),
        ("L_R", terms.covariance()),
        ("L_A", terms.adversary),
    ];
    for (term, value) in named {
        if value.is_some_and(|v| !v.is_finite()) {
            return Err(Error::Divergence { epoch, term });
        }
    }
    Ok(())
}

struct EarlyStop {
    patience: usize,
    best: f64,
    since_best: usize,
}

impl EarlyStop {
    fn new(patience: usize, masks: &SplitMasks) -> Self {
        EarlyStop {
            patience: if masks.val_ids.is_empty() { 0 } else { patience },
            best: f64::NEG_INFINITY,
            since_best: 0,
        }
    }

    fn should_stop(&mut self, val_acc: f64) -> bool {
        if self.patience == 0 {
            return false;
        }
        if val_acc > self.best {
            self.best = val_acc;
            self.since_best = 0;
        } else {
            self.since_best += 1;
        }
        self.since_best >= self.patience
    }
}

/// Alternating fairness-aware training. `estimator_init` is the pre-trained
/// (or, for the concurrent ablation, freshly initialised) estimator.
pub fn train_fair_gnn(
    ctx: &GraphContext,
    masks: &SplitMasks,
    estimator_init: &EstimatorParams,
    dims: ModelDims,
    hp: &FairnessHyperparams,
    seed: u64,
) -> Result<TrainedModel> {
    hp.validate()?;
    masks.validate(ctx.num_nodes())?;
    if masks.train_ids.is_empty() {
        return Err(Error::Training("empty training set".into()));
    }
    let mut params = ModelParams::init(dims, seed);
    params.estimator = estimator_init.clone();
    let mut obj = Objective::new(
        ctx,
        &masks.train_ids,
        &masks.sensitive_known_ids,
        &fairness_nodes(ctx, masks, hp.adversary_scope),
    )?;

    let mut opt_c = Adam::for_group(hp.lr_classifier, &params.classifier);
    let mut opt_e = Adam::for_group(hp.lr_estimator, &params.estimator);
    let mut opt_a = Adam::for_group(hp.lr_adversary, &params.adversary);
    let weights = LossWeights {
        estimator: if hp.freeze_estimator { 0.0 } else { 1.0 },
        ..LossWeights::generator(hp.alpha, hp.beta)
    };
    let val_nodes = if masks.val_ids.is_empty() {
        &masks.train_ids
    } else {
        &masks.val_ids
    };
    let mut early = EarlyStop::new(hp.patience, masks);
    let mut log = Vec::with_capacity(hp.epochs);
    let mut stopped_early = false;

    for epoch in 0..hp.epochs {
        let state = obj.forward(&params, ctx)?;
        obj.refresh_partition(&state.estimator.probs);
        let adversary_active = hp.beta != 0.0 && obj.adversary_active();
        if hp.beta != 0.0 && !adversary_active && epoch == 0 {
            log::warn!("one estimated sensitive group is empty; adversary disabled");
        }
        let terms = obj.losses(&state);
        check_terms(epoch, &terms)?;
        let val_acc = accuracy_at(&state.classifier.probs, ctx, val_nodes);
        log.push(EpochLog {
            epoch,
            classification: terms.classification.unwrap_or(0.0),
            estimator: terms.estimator.unwrap_or(0.0),
            covariance: terms.covariance().unwrap_or(0.0),
            adversary: if adversary_active { terms.adversary.unwrap_or(0.0) } else { 0.0 },
            adversary_active,
            val_acc,
        });

        let grads = obj.backprop(&params, &state, ctx, &weights)?;
        opt_c.descend(&mut params.classifier, &grads.classifier);
        if !hp.freeze_estimator {
            opt_e.descend(&mut params.estimator, &grads.estimator);
        }

        if hp.adversary_steps_per_epoch > 0 && adversary_active {
            let mut state = obj.forward(&params, ctx)?;
            for _ in 0..hp.adversary_steps_per_epoch {
                let grad = obj.adversary_gradient(&params.adversary, &state)?;
                opt_a.ascend(&mut params.adversary, &grad);
                obj.refresh_adversary(&mut state, &params.adversary)?;
            }
        }

        if early.should_stop(val_acc) {
            stopped_early = true;
            break;
        }
    }

    if !params.is_finite() {
        return Err(Error::Divergence {
            epoch: log.len(),
            term: "parameters",
        });
    }
    Ok(TrainedModel {
        params,
        log,
        seed,
        stopped_early,
    })
}

/// Reference GCN trainer: classification loss only, same initialisation and
/// optimizer as [`train_fair_gnn`]. Estimator and adversary keep their
/// initial values.
pub fn train_plain_gcn(
    ctx: &GraphContext,
    masks: &SplitMasks,
    dims: ModelDims,
    hp: &FairnessHyperparams,
    seed: u64,
) -> Result<TrainedModel> {
    hp.validate()?;
    masks.validate(ctx.num_nodes())?;
    let mut params = ModelParams::init(dims, seed);
    let obj = Objective::new(ctx, &masks.train_ids, &[], &[])?;
    let mut opt = Adam::for_group(hp.lr_classifier, &params.classifier);
    let val_nodes = if masks.val_ids.is_empty() {
        &masks.train_ids
    } else {
        &masks.val_ids
    };
    let mut early = EarlyStop::new(hp.patience, masks);
    let mut log = Vec::with_capacity(hp.epochs);
    let mut stopped_early = false;
    for epoch in 0..hp.epochs {
        let state = obj.forward(&params, ctx)?;
        let terms = obj.losses(&state);
        check_terms(epoch, &terms)?;
        let val_acc = accuracy_at(&state.classifier.probs, ctx, val_nodes);
        log.push(EpochLog {
            epoch,
            classification: terms.classification.unwrap_or(0.0),
            estimator: 0.0,
            covariance: 0.0,
            adversary: 0.0,
            adversary_active: false,
            val_acc,
        });
        let grads = obj.backprop(&params, &state, ctx, &LossWeights::classification())?;
        opt.descend(&mut params.classifier, &grads.classifier);
        if early.should_stop(val_acc) {
            stopped_early = true;
            break;
        }
    }
    Ok(TrainedModel {
        params,
        log,
        seed,
        stopped_early,
    })
}

/// Generator objective at the given parameters, with the adversary
/// partition taken from the current estimator.
pub fn generator_objective(
    ctx: &GraphContext,
    masks: &SplitMasks,
    params: &ModelParams,
    hp: &FairnessHyperparams,
) -> Result<f64> {
    let mut obj = Objective::new(
        ctx,
        &masks.train_ids,
        &masks.sensitive_known_ids,
        &fairness_nodes(ctx, masks, hp.adversary_scope),
    )?;
    let state = obj.forward(params, ctx)?;
    obj.refresh_partition(&state.estimator.probs);
    Ok(obj.losses(&state).weighted(&LossWeights::generator(hp.alpha, hp.beta)))
}
