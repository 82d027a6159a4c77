//! Sensitive-attribute estimator: pre-training on the nodes whose attribute
//! is known, and inference of proxy attributes for every node.

use serde::{Deserialize, Serialize};

use crate::error::{Error, NnError, Result};
use crate::graph::SplitMasks;
use crate::nn::{
    estimator_forward, estimator_loss_and_gradient, Adam, EstimatorParams, GraphContext, ModelDims,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub epochs: usize,
    pub lr: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            epochs: 300,
            lr: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorFit {
    pub params: EstimatorParams,
    /// Loss before the first update, then after every epoch.
    pub losses: Vec<f64>,
    /// All known attributes share one value; the estimator degenerates to a
    /// constant.
    pub single_class: bool,
}

impl EstimatorFit {
    pub fn initial_loss(&self) -> f64 {
        self.losses[0]
    }

    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("losses always hold the initial value")
    }
}

/// Estimated sensitive attribute for every node.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitiveEstimate {
    pub probabilities: Vec<f64>,
    /// `1` iff the probability is at least 0.5.
    pub hard: Vec<u8>,
}

impl SensitiveEstimate {
    pub fn from_probabilities(probabilities: Vec<f64>) -> Self {
        let hard = probabilities.iter().map(|&p| u8::from(p >= 0.5)).collect();
        SensitiveEstimate {
            probabilities,
            hard,
        }
    }

    /// Share of `nodes` whose hard estimate matches the graph's attribute.
    pub fn accuracy_on(&self, ctx: &GraphContext, nodes: &[usize]) -> Option<f64> {
        let known: Vec<(usize, u8)> = nodes
            .iter()
            .filter_map(|&v| ctx.graph().sensitive()[v].map(|s| (v, s)))
            .collect();
        if known.is_empty() {
            return None;
        }
        let hits = known.iter().filter(|(v, s)| self.hard[*v] == *s).count();
        Some(hits as f64 / known.len() as f64)
    }
}

/// Minimises the mean BCE of the estimator over `masks.sensitive_known_ids`
/// with Adam for `config.epochs` full-graph steps.
pub fn train_estimator(
    ctx: &GraphContext,
    masks: &SplitMasks,
    dims: &ModelDims,
    config: &EstimatorConfig,
    seed: u64,
) -> Result<EstimatorFit> {
    let nodes = &masks.sensitive_known_ids;
    if nodes.is_empty() {
        return Err(Error::Training(
            "no node has a known sensitive attribute".into(),
        ));
    }
    let targets = nodes
        .iter()
        .map(|&v| {
            ctx.graph().sensitive()[v]
                .map(f64::from)
                .ok_or(NnError::Unlabeled(v))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let single_class = targets.iter().all(|&t| t == targets[0]);
    if single_class {
        log::warn!(
            "all {} known sensitive attributes equal {}; the estimator will be constant",
            targets.len(),
            targets[0]
        );
    }

    let mut params = EstimatorParams::init(dims, seed);
    let mut opt = Adam::for_group(config.lr, &params);
    let mut losses = Vec::with_capacity(config.epochs + 1);
    for epoch in 0..config.epochs {
        let (loss, grad) = estimator_loss_and_gradient(&params, ctx, nodes, &targets)?;
        if !loss.is_finite() {
            return Err(Error::Divergence {
                epoch,
                term: "estimator loss",
            });
        }
        losses.push(loss);
        opt.descend(&mut params, &grad);
    }
    let (last, _) = estimator_loss_and_gradient(&params, ctx, nodes, &targets)?;
    losses.push(last);

    Ok(EstimatorFit {
        params,
        losses,
        single_class,
    })
}

/// Proxy sensitive attributes for every node of `ctx`.
pub fn estimate_sensitive(params: &EstimatorParams, ctx: &GraphContext) -> Result<SensitiveEstimate, NnError> {
    let cache = estimator_forward(params, ctx)?;
    Ok(SensitiveEstimate::from_probabilities(cache.probs.to_vec()))
}
