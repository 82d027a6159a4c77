//! Shadow-model membership inference.
//!
//! A shadow GCN is trained on half of a pool of labeled nodes that are
//! neither target members nor target nonmembers. A logistic attack model
//! learns to tell the shadow's training nodes from the other half using
//! posterior features only, and is then applied to the target model's
//! posteriors. The reported AUC treats members as positives.

use rand::seq::SliceRandom;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, MetricError, Result};
use crate::fair_train::{train_plain_gcn, FairnessHyperparams};
use crate::graph::SplitMasks;
use crate::nn::{classifier_forward, loss, ClassifierParams, GraphContext, ModelDims};
use crate::rng::{stream, Stream};

/// Version tag of the attack feature vector.
pub const ATTACK_FEATURES: &str = "posterior-v1: p, |p - 0.5|, bce(p, 1[p >= 0.5])";

const NUM_FEATURES: usize = 3;
type Features = [f64; NUM_FEATURES];

const RIDGE: f64 = 1e-4;

/// Attack features of `nodes` from the predicted probabilities of every
/// node.
pub fn attack_features(probs: &[f64], nodes: &[usize]) -> Vec<Features> {
    nodes
        .iter()
        .map(|&v| {
            let p = loss::clamp_prob(probs[v]);
            let hard = if p >= 0.5 { 1.0 } else { 0.0 };
            [p, (p - 0.5).abs(), loss::bce(p, hard)]
        })
        .collect()
}

/// ROC AUC of `scores` with `positive` marking the positive class, ties
/// counted as one half.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> Result<f64, MetricError> {
    if scores.len() != positive.len() {
        return Err(MetricError::LengthMismatch(scores.len(), positive.len()));
    }
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(MetricError::Undefined {
            metric: "ROC AUC",
            reason: "needs at least one positive and one negative".into(),
        });
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Mann-Whitney U with mid-ranks for ties
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mid_rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if positive[k] {
                rank_sum += mid_rank;
            }
        }
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MiaResult {
    pub auc: f64,
    pub attack_features: String,
    pub members: usize,
    pub nonmembers: usize,
    /// The attack had nothing to separate; `auc` is fixed at 0.5.
    pub degenerate: bool,
}

/// Logistic regression on standardised attack features.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackModel {
    mean: Features,
    scale: Features,
    weights: Features,
    bias: f64,
    degenerate: bool,
}

fn solve(mut a: [[f64; 4]; 4], mut b: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let pivot = (col..4).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..4 {
            let f = a[row][col] / a[col][col];
            for k in col..4 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let tail: f64 = (row + 1..4).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

impl AttackModel {
    /// Fits the attack on features of known members (positives) and
    /// nonmembers.
    pub fn fit(members: &[Features], nonmembers: &[Features]) -> Result<Self, MetricError> {
        if members.is_empty() || nonmembers.is_empty() {
            return Err(MetricError::Empty("attack training set"));
        }
        let rows: Vec<(&Features, f64)> = members
            .iter()
            .map(|x| (x, 1.0))
            .chain(nonmembers.iter().map(|x| (x, 0.0)))
            .collect();
        let n = rows.len() as f64;
        let mut mean = [0.0; NUM_FEATURES];
        for (x, _) in &rows {
            for k in 0..NUM_FEATURES {
                mean[k] += x[k] / n;
            }
        }
        let mut scale = [0.0; NUM_FEATURES];
        for (x, _) in &rows {
            for k in 0..NUM_FEATURES {
                scale[k] += (x[k] - mean[k]).powi(2) / n;
            }
        }
        for s in &mut scale {
            *s = if *s > 1e-24 { 1.0 / s.sqrt() } else { 0.0 };
        }
        let mut model = AttackModel {
            mean,
            scale,
            weights: [0.0; NUM_FEATURES],
            bias: 0.0,
            degenerate: scale.iter().all(|&s| s == 0.0),
        };
        if model.degenerate {
            return Ok(model);
        }

        let design: Vec<([f64; 4], f64)> = rows
            .iter()
            .map(|(x, y)| {
                let z = model.standardize(x);
                ([z[0], z[1], z[2], 1.0], *y)
            })
            .collect();
        let objective = |w: &[f64; 4]| {
            let data: f64 = design
                .iter()
                .map(|(x, y)| {
                    let t: f64 = (0..4).map(|k| w[k] * x[k]).sum();
                    // log(1 + e^t) - y t, computed stably
                    t.max(0.0) + (-t.abs()).exp().ln_1p() - y * t
                })
                .sum::<f64>()
                / n;
            data + RIDGE * w.iter().map(|v| v * v).sum::<f64>()
        };

        let mut w = [0.0; 4];
        let mut current = objective(&w);
        for _ in 0..100 {
            let mut grad = [0.0; 4];
            let mut hess = [[0.0; 4]; 4];
            for (x, y) in &design {
                let t: f64 = (0..4).map(|k| w[k] * x[k]).sum();
                let p = loss::sigmoid(t);
                let r = p * (1.0 - p);
                for i in 0..4 {
                    grad[i] += (p - y) * x[i] / n;
                    for j in 0..4 {
                        hess[i][j] += r * x[i] * x[j] / n;
                    }
                }
            }
            for i in 0..4 {
                grad[i] += 2.0 * RIDGE * w[i];
                hess[i][i] += 2.0 * RIDGE;
            }
            let Some(step) = solve(hess, grad) else { break };
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-8 {
                let trial: [f64; 4] = std::array::from_fn(|k| w[k] - t * step[k]);
                let value = objective(&trial);
                if value <= current {
                    accepted = current - value > 1e-14;
                    w = trial;
                    current = value;
                    break;
                }
                t /= 2.0;
            }
            if !accepted {
                break;
            }
        }
        model.weights = [w[0], w[1], w[2]];
        model.bias = w[3];
        Ok(model)
    }

    fn standardize(&self, x: &Features) -> Features {
        std::array::from_fn(|k| (x[k] - self.mean[k]) * self.scale[k])
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Attack logit; larger means "member".
    pub fn score(&self, x: &Features) -> f64 {
        let z = self.standardize(x);
        self.bias + (0..NUM_FEATURES).map(|k| self.weights[k] * z[k]).sum::<f64>()
    }

    pub fn evaluate(&self, members: &[Features], nonmembers: &[Features]) -> Result<MiaResult, MetricError> {
        let mut result = MiaResult {
            auc: 0.5,
            attack_features: ATTACK_FEATURES.to_string(),
            members: members.len(),
            nonmembers: nonmembers.len(),
            degenerate: true,
        };
        if members.is_empty() || nonmembers.is_empty() {
            return Err(MetricError::Empty("member or nonmember set"));
        }
        let all_same = members
            .iter()
            .chain(nonmembers)
            .all(|x| x == &members[0]);
        if self.degenerate || all_same {
            return Ok(result);
        }
        let scores: Vec<f64> = members.iter().chain(nonmembers).map(|x| self.score(x)).collect();
        let positive: Vec<bool> = (0..scores.len()).map(|i| i < members.len()).collect();
        result.auc = roc_auc(&scores, &positive)?;
        result.degenerate = false;
        Ok(result)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShadowConfig {
    pub epochs: usize,
    pub lr: f64,
}

impl Default for ShadowConfig {
    fn default() -> Self {
        ShadowConfig {
            epochs: 300,
            lr: 0.01,
        }
    }
}

/// A fitted attack together with the sizes of the shadow split it saw.
#[derive(Debug, Clone)]
pub struct ShadowAttack {
    pub model: AttackModel,
    pub shadow_in: usize,
    pub shadow_out: usize,
}

impl ShadowAttack {
    /// Trains a shadow GCN of shape `dims` on half of the labeled nodes
    /// outside `exclude` and fits the attack on its posteriors.
    pub fn fit(
        ctx: &GraphContext,
        exclude: &[usize],
        dims: ModelDims,
        config: &ShadowConfig,
        seed: u64,
    ) -> Result<Self> {
        let mut excluded = vec![false; ctx.num_nodes()];
        for &v in exclude {
            excluded[v] = true;
        }
        let mut pool: Vec<usize> = (0..ctx.num_nodes())
            .filter(|&v| !excluded[v] && ctx.graph().label(v).is_some())
            .collect();
        if pool.len() < 4 {
            return Err(MetricError::Undefined {
                metric: "membership inference",
                reason: format!("shadow pool has only {} nodes", pool.len()),
            }
            .into());
        }
        let mut rng = stream(seed, Stream::Shadow);
        pool.shuffle(&mut rng);
        let half = pool.len() / 2;
        let mut shadow_in = pool[..half].to_vec();
        let mut shadow_out = pool[half..].to_vec();
        shadow_in.sort_unstable();
        shadow_out.sort_unstable();

        let masks = SplitMasks {
            train_ids: shadow_in.clone(),
            val_ids: Vec::new(),
            test_ids: shadow_out.clone(),
            sensitive_known_ids: Vec::new(),
            forget_ids: Vec::new(),
        };
        let hp = FairnessHyperparams {
            epochs: config.epochs,
            lr_classifier: config.lr,
            patience: 0,
            ..FairnessHyperparams::default()
        };
        let model_seed = stream(seed, Stream::ShadowModel).next_u64();
        let shadow = train_plain_gcn(ctx, &masks, dims, &hp, model_seed)?;
        let probs = classifier_forward(&shadow.params.classifier, ctx)?.probs.to_vec();
        let model = AttackModel::fit(
            &attack_features(&probs, &shadow_in),
            &attack_features(&probs, &shadow_out),
        )?;
        Ok(ShadowAttack {
            model,
            shadow_in: shadow_in.len(),
            shadow_out: shadow_out.len(),
        })
    }

    /// Attacks `target` on the graph of `ctx`.
    pub fn evaluate(
        &self,
        target: &ClassifierParams,
        ctx: &GraphContext,
        members: &[usize],
        nonmembers: &[usize],
    ) -> Result<MiaResult> {
        if members.iter().any(|v| nonmembers.contains(v)) {
            return Err(Error::Config(
                "member and nonmember sets overlap".into(),
            ));
        }
        let probs = classifier_forward(target, ctx)?.probs.to_vec();
        Ok(self.model.evaluate(
            &attack_features(&probs, members),
            &attack_features(&probs, nonmembers),
        )?)
    }
}
