//! Analytic gradients of the training objective.
//!
//! The objective is a weighted sum of four terms:
//!
//! * `L_C`: mean BCE of the classifier over the labeled nodes,
//! * `L_E`: mean BCE of the estimator over the nodes with known sensitive attribute,
//! * `L_R`: absolute covariance between estimated sensitive probabilities and
//!   predicted probabilities over the fairness nodes,
//! * `L_A`: the adversary objective over the fairness nodes, partitioned by
//!   the hard estimated sensitive attribute.
//!
//! Loss values use clamped probabilities; derivatives use the unclamped
//! sigmoid, which is the exact derivative wherever the clamp is inactive.

use ndarray::{Array1, Array2, Axis};

use super::forward::{
    adversary_logits, classifier_forward, estimator_forward, relu_mask_mul, ClassifierCache,
    EstimatorCache, GraphContext,
};
use super::loss::{self, sigmoid};
use super::params::{AdversaryParams, ClassifierParams, EstimatorParams, ModelParams, ParamGroup};
use crate::error::NnError;
use crate::graph::SplitMasks;

/// Multipliers applied to each loss term. Terms with weight exactly zero
/// are skipped entirely.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub classification: f64,
    pub estimator: f64,
    pub covariance: f64,
    pub adversary: f64,
}

impl LossWeights {
    pub const ZERO: LossWeights = LossWeights {
        classification: 0.0,
        estimator: 0.0,
        covariance: 0.0,
        adversary: 0.0,
    };

    /// Generator objective `L_C + L_E + α L_R + β L_A`.
    ///
    /// `L_A` is the adversary's log-likelihood, which the generator pushes
    /// down while the adversary pushes it up. Written with the adversary's
    /// cross-entropy `−L_A` this is the familiar `… − β·CE_A` form.
    pub fn generator(alpha: f64, beta: f64) -> Self {
        LossWeights {
            classification: 1.0,
            estimator: 1.0,
            covariance: alpha,
            adversary: beta,
        }
    }

    pub fn classification() -> Self {
        LossWeights {
            classification: 1.0,
            ..Self::ZERO
        }
    }

    pub fn estimator() -> Self {
        LossWeights {
            estimator: 1.0,
            ..Self::ZERO
        }
    }

    pub fn covariance() -> Self {
        LossWeights {
            covariance: 1.0,
            ..Self::ZERO
        }
    }

    pub fn adversary() -> Self {
        LossWeights {
            adversary: 1.0,
            ..Self::ZERO
        }
    }

    fn terms(&self) -> [(&'static str, LossWeights); 4] {
        [
            ("classification", LossWeights { classification: self.classification, ..Self::ZERO }),
            ("estimator", LossWeights { estimator: self.estimator, ..Self::ZERO }),
            ("covariance", LossWeights { covariance: self.covariance, ..Self::ZERO }),
            ("adversary", LossWeights { adversary: self.adversary, ..Self::ZERO }),
        ]
    }
}

/// Loss values at one forward state. Terms that cannot be evaluated (empty
/// node sets, a missing estimated group) are `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms {
    pub classification: Option<f64>,
    pub estimator: Option<f64>,
    /// Signed covariance; `L_R` is its absolute value.
    pub covariance_signed: Option<f64>,
    pub adversary: Option<f64>,
}

impl LossTerms {
    pub fn covariance(&self) -> Option<f64> {
        self.covariance_signed.map(f64::abs)
    }

    /// Weighted total with missing terms counted as zero.
    pub fn weighted(&self, w: &LossWeights) -> f64 {
        let term = |weight: f64, value: Option<f64>| {
            if weight == 0.0 {
                0.0
            } else {
                weight * value.unwrap_or(0.0)
            }
        };
        term(w.classification, self.classification)
            + term(w.estimator, self.estimator)
            + term(w.covariance, self.covariance())
            + term(w.adversary, self.adversary)
    }
}

/// Gradients for all three parameter groups, shape-congruent with them.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub classifier: ClassifierParams,
    pub estimator: EstimatorParams,
    pub adversary: AdversaryParams,
}

impl Gradients {
    pub fn is_finite(&self) -> bool {
        self.classifier.is_finite() && self.estimator.is_finite() && self.adversary.is_finite()
    }
}

/// Forward values for every parameter group.
#[derive(Debug, Clone)]
pub struct ForwardState {
    pub classifier: ClassifierCache,
    pub estimator: EstimatorCache,
    /// Adversary logits, one per fairness node.
    pub adversary_logits: Vec<f64>,
    adversary_fingerprint: u64,
}

/// Node sets and targets defining the training objective.
#[derive(Debug, Clone, PartialEq)]
pub struct Objective {
    labeled: Vec<usize>,
    label_targets: Vec<f64>,
    sensitive_known: Vec<usize>,
    sensitive_targets: Vec<f64>,
    fairness_nodes: Vec<usize>,
    partition: Vec<u8>,
}

impl Objective {
    /// Labels come from `graph` for `labeled`, true sensitive values for
    /// `sensitive_known`. The adversary partition starts empty.
    pub fn new(
        ctx: &GraphContext,
        labeled: &[usize],
        sensitive_known: &[usize],
        fairness_nodes: &[usize],
    ) -> Result<Self, NnError> {
        let g = ctx.graph();
        let n = g.num_nodes();
        for &v in labeled.iter().chain(sensitive_known).chain(fairness_nodes) {
            if v >= n {
                return Err(NnError::NodeOutOfRange(v));
            }
        }
        let label_targets = labeled
            .iter()
            .map(|&v| g.label(v).map(f64::from).ok_or(NnError::Unlabeled(v)))
            .collect::<Result<Vec<_>, _>>()?;
        let sensitive_targets = sensitive_known
            .iter()
            .map(|&v| g.sensitive()[v].map(f64::from).ok_or(NnError::Unlabeled(v)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Objective {
            labeled: labeled.to_vec(),
            label_targets,
            sensitive_known: sensitive_known.to_vec(),
            sensitive_targets,
            fairness_nodes: fairness_nodes.to_vec(),
            partition: Vec::new(),
        })
    }

    /// Objective over `masks.train_ids` and `masks.sensitive_known_ids`, with
    /// the fairness terms over every node.
    pub fn from_masks(ctx: &GraphContext, masks: &SplitMasks) -> Result<Self, NnError> {
        let all: Vec<usize> = (0..ctx.num_nodes()).collect();
        Objective::new(ctx, &masks.train_ids, &masks.sensitive_known_ids, &all)
    }

    pub fn labeled(&self) -> &[usize] {
        &self.labeled
    }

    pub fn sensitive_known(&self) -> &[usize] {
        &self.sensitive_known
    }

    pub fn fairness_nodes(&self) -> &[usize] {
        &self.fairness_nodes
    }

    pub fn partition(&self) -> &[u8] {
        &self.partition
    }

    /// Sets the hard estimated group of every fairness node from estimator
    /// probabilities over all nodes (`1` iff `p >= 0.5`).
    pub fn refresh_partition(&mut self, estimator_probs: &Array1<f64>) {
        self.partition = self
            .fairness_nodes
            .iter()
            .map(|&v| u8::from(estimator_probs[v] >= 0.5))
            .collect();
    }

    pub fn set_partition(&mut self, partition: Vec<u8>) -> Result<(), NnError> {
        if partition.len() != self.fairness_nodes.len() {
            return Err(NnError::Shape {
                context: "adversary partition",
                expected: self.fairness_nodes.len().to_string(),
                found: partition.len().to_string(),
            });
        }
        self.partition = partition;
        Ok(())
    }

    fn group_sizes(&self) -> (usize, usize) {
        let ones = self.partition.iter().filter(|&&g| g == 1).count();
        (self.partition.len() - ones, ones)
    }

    /// Whether both estimated groups are populated.
    pub fn adversary_active(&self) -> bool {
        let (n0, n1) = self.group_sizes();
        !self.partition.is_empty() && n0 > 0 && n1 > 0
    }

    pub fn forward(&self, params: &ModelParams, ctx: &GraphContext) -> Result<ForwardState, NnError> {
        let classifier = classifier_forward(&params.classifier, ctx)?;
        let estimator = estimator_forward(&params.estimator, ctx)?;
        let adversary_logits = adversary_logits(&params.adversary, &classifier.h, &self.fairness_nodes)?;
        Ok(ForwardState {
            classifier,
            estimator,
            adversary_logits,
            adversary_fingerprint: params.adversary.fingerprint(),
        })
    }

    /// Recomputes only the adversary outputs after an adversary update.
    pub fn refresh_adversary(&self, state: &mut ForwardState, adversary: &AdversaryParams) -> Result<(), NnError> {
        state.adversary_logits = adversary_logits(adversary, &state.classifier.h, &self.fairness_nodes)?;
        state.adversary_fingerprint = adversary.fingerprint();
        Ok(())
    }

    pub fn losses(&self, state: &ForwardState) -> LossTerms {
        let y_probs: Vec<f64> = self.labeled.iter().map(|&v| state.classifier.probs[v]).collect();
        let classification = loss::mean_bce(&y_probs, &self.label_targets).ok();
        let s_probs: Vec<f64> = self
            .sensitive_known
            .iter()
            .map(|&v| state.estimator.probs[v])
            .collect();
        let estimator = loss::mean_bce(&s_probs, &self.sensitive_targets).ok();

        let s_soft: Vec<f64> = self.fairness_nodes.iter().map(|&v| state.estimator.probs[v]).collect();
        let y_soft: Vec<f64> = self.fairness_nodes.iter().map(|&v| state.classifier.probs[v]).collect();
        let covariance_signed = loss::covariance(&s_soft, &y_soft).ok();

        let adversary = if self.adversary_active() {
            let probs: Vec<f64> = state.adversary_logits.iter().map(|&z| sigmoid(z)).collect();
            loss::adversary_objective(&probs, &self.partition).ok()
        } else {
            None
        };
        LossTerms {
            classification,
            estimator,
            covariance_signed,
            adversary,
        }
    }

    /// Exact gradients of the weighted objective for all three groups.
    pub fn backprop(
        &self,
        params: &ModelParams,
        state: &ForwardState,
        ctx: &GraphContext,
        weights: &LossWeights,
    ) -> Result<Gradients, NnError> {
        if !state.classifier.is_fresh_for(&params.classifier) {
            return Err(NnError::StaleCache("classifier"));
        }
        if state.estimator.fingerprint != params.estimator.fingerprint() {
            return Err(NnError::StaleCache("estimator"));
        }
        if state.adversary_fingerprint != params.adversary.fingerprint() {
            return Err(NnError::StaleCache("adversary"));
        }
        let grads = self.backprop_unchecked(params, state, ctx, weights);
        if grads.is_finite() {
            return Ok(grads);
        }
        for (name, single) in weights.terms() {
            if !self.backprop_unchecked(params, state, ctx, &single).is_finite() {
                return Err(NnError::NonFiniteGradient(name));
            }
        }
        Err(NnError::NonFiniteGradient("combined objective"))
    }

    /// `∂L_A/∂θ_A` alone, for the adversary's ascent step. Zero when one
    /// estimated group is empty.
    pub fn adversary_gradient(
        &self,
        adversary: &AdversaryParams,
        state: &ForwardState,
    ) -> Result<AdversaryParams, NnError> {
        if state.adversary_fingerprint != adversary.fingerprint() {
            return Err(NnError::StaleCache("adversary"));
        }
        let mut grad = adversary.zeros_like();
        if !self.adversary_active() {
            return Ok(grad);
        }
        let (n0, n1) = self.group_sizes();
        for ((&v, &g), &z) in self
            .fairness_nodes
            .iter()
            .zip(&self.partition)
            .zip(&state.adversary_logits)
        {
            let a = sigmoid(z);
            let dz = if g == 1 {
                (1.0 - a) / n1 as f64
            } else {
                -a / n0 as f64
            };
            grad.weight.scaled_add(dz, &state.classifier.h.row(v));
            grad.bias += dz;
        }
        if !grad.is_finite() {
            return Err(NnError::NonFiniteGradient("adversary"));
        }
        Ok(grad)
    }

    fn backprop_unchecked(
        &self,
        params: &ModelParams,
        state: &ForwardState,
        ctx: &GraphContext,
        w: &LossWeights,
    ) -> Gradients {
        let n = ctx.num_nodes();
        let cls = &state.classifier;
        let est = &state.estimator;
        let mut dlogit_c = Array1::<f64>::zeros(n);
        let mut dlogit_e = Array1::<f64>::zeros(n);
        let mut dh: Option<Array2<f64>> = None;
        let mut adversary = params.adversary.zeros_like();
        let mut touches_classifier = false;
        let mut touches_estimator = false;

        if w.classification != 0.0 && !self.labeled.is_empty() {
            let scale = w.classification / self.labeled.len() as f64;
            for (&v, &y) in self.labeled.iter().zip(&self.label_targets) {
                dlogit_c[v] += scale * (sigmoid(cls.logits[v]) - y);
            }
            touches_classifier = true;
        }

        if w.estimator != 0.0 && !self.sensitive_known.is_empty() {
            let scale = w.estimator / self.sensitive_known.len() as f64;
            for (&v, &s) in self.sensitive_known.iter().zip(&self.sensitive_targets) {
                dlogit_e[v] += scale * (sigmoid(est.logits[v]) - s);
            }
            touches_estimator = true;
        }

        let m = self.fairness_nodes.len();
        if w.covariance != 0.0 && m >= 2 {
            let mf = m as f64;
            let s_mean = self.fairness_nodes.iter().map(|&v| est.probs[v]).sum::<f64>() / mf;
            let y_mean = self.fairness_nodes.iter().map(|&v| cls.probs[v]).sum::<f64>() / mf;
            let cov = self
                .fairness_nodes
                .iter()
                .map(|&v| (est.probs[v] - s_mean) * (cls.probs[v] - y_mean))
                .sum::<f64>()
                / mf;
            let sign = if cov > 0.0 {
                1.0
            } else if cov < 0.0 {
                -1.0
            } else {
                0.0
            };
            let scale = w.covariance * sign / mf;
            for &v in &self.fairness_nodes {
                let py = sigmoid(cls.logits[v]);
                let ps = sigmoid(est.logits[v]);
                dlogit_c[v] += scale * (est.probs[v] - s_mean) * py * (1.0 - py);
                dlogit_e[v] += scale * (cls.probs[v] - y_mean) * ps * (1.0 - ps);
            }
            touches_classifier = true;
            touches_estimator = true;
        }

        if w.adversary != 0.0 && self.adversary_active() {
            let (n0, n1) = self.group_sizes();
            let mut dhm = Array2::<f64>::zeros(cls.h.dim());
            for ((&v, &g), &z) in self
                .fairness_nodes
                .iter()
                .zip(&self.partition)
                .zip(&state.adversary_logits)
            {
                let a = sigmoid(z);
                let dz = if g == 1 {
                    w.adversary * (1.0 - a) / n1 as f64
                } else {
                    -w.adversary * a / n0 as f64
                };
                adversary.weight.scaled_add(dz, &cls.h.row(v));
                adversary.bias += dz;
                dhm.row_mut(v).scaled_add(dz, &params.adversary.weight);
            }
            dh = Some(dhm);
            touches_classifier = true;
        }

        let classifier = if touches_classifier {
            classifier_backward(&params.classifier, cls, ctx, &dlogit_c, dh)
        } else {
            params.classifier.zeros_like()
        };
        let estimator = if touches_estimator {
            estimator_backward(&params.estimator, est, ctx, &dlogit_e)
        } else {
            params.estimator.zeros_like()
        };
        Gradients {
            classifier,
            estimator,
            adversary,
        }
    }
}

/// Products of transposed views may come back column-major; parameter
/// groups are flattened row-major.
fn standard(a: Array2<f64>) -> Array2<f64> {
    if a.is_standard_layout() {
        a
    } else {
        a.as_standard_layout().into_owned()
    }
}

/// Backpropagates `∂L/∂logit` (and optionally an extra `∂L/∂h`) through
/// the classifier.
fn classifier_backward(
    params: &ClassifierParams,
    cache: &ClassifierCache,
    ctx: &GraphContext,
    dlogit: &Array1<f64>,
    extra_dh: Option<Array2<f64>>,
) -> ClassifierParams {
    let head = cache.h.t().dot(dlogit);
    let outer = dlogit
        .view()
        .insert_axis(Axis(1))
        .dot(&params.head.view().insert_axis(Axis(0)));
    let mut dz2 = match extra_dh {
        Some(extra) => extra + &outer,
        None => outer,
    };
    relu_mask_mul(&mut dz2, &cache.z2);
    let w2 = standard(cache.ah1.t().dot(&dz2));
    let b2 = dz2.sum_axis(Axis(0));
    // Â is symmetric, so Âᵀ dZ2 = Â dZ2
    let mut dz1 = ctx.adj().propagate(dz2.view()).dot(&params.w2.t());
    relu_mask_mul(&mut dz1, &cache.z1);
    let w1 = standard(ctx.propagated_features().t().dot(&dz1));
    let b1 = dz1.sum_axis(Axis(0));
    ClassifierParams { w1, b1, w2, b2, head }
}

fn estimator_backward(
    params: &EstimatorParams,
    cache: &EstimatorCache,
    ctx: &GraphContext,
    dlogit: &Array1<f64>,
) -> EstimatorParams {
    let head = cache.h.t().dot(dlogit);
    let head_bias = dlogit.sum();
    let mut dz = dlogit
        .view()
        .insert_axis(Axis(1))
        .dot(&params.head.view().insert_axis(Axis(0)));
    relu_mask_mul(&mut dz, &cache.z);
    let w = standard(ctx.propagated_features().t().dot(&dz));
    let b = dz.sum_axis(Axis(0));
    EstimatorParams { w, b, head, head_bias }
}

/// Mean BCE of the estimator over `nodes` against `targets`, and its
/// gradient. This is the `L_E` term on its own, without a classifier pass.
pub fn estimator_loss_and_gradient(
    params: &EstimatorParams,
    ctx: &GraphContext,
    nodes: &[usize],
    targets: &[f64],
) -> Result<(f64, EstimatorParams), NnError> {
    if nodes.len() != targets.len() {
        return Err(NnError::Shape {
            context: "estimator targets",
            expected: nodes.len().to_string(),
            found: targets.len().to_string(),
        });
    }
    let cache = estimator_forward(params, ctx)?;
    let probs: Vec<f64> = nodes.iter().map(|&v| cache.probs[v]).collect();
    let value = loss::mean_bce(&probs, targets).unwrap_or(0.0);
    let mut dlogit = Array1::<f64>::zeros(ctx.num_nodes());
    if !nodes.is_empty() {
        let scale = 1.0 / nodes.len() as f64;
        for (&v, &s) in nodes.iter().zip(targets) {
            dlogit[v] += scale * (sigmoid(cache.logits[v]) - s);
        }
    }
    Ok((value, estimator_backward(params, &cache, ctx, &dlogit)))
}

/// Gradient of the single-node BCE at `node` with respect to the classifier,
/// computed from a full-graph forward cache. Only the node's 2-hop
/// neighbourhood contributes, so the work is local.
pub fn per_node_gradient_from_cache(
    params: &ClassifierParams,
    cache: &ClassifierCache,
    ctx: &GraphContext,
    node: usize,
) -> Result<ClassifierParams, NnError> {
    let mut out = params.zeros_like();
    accumulate_node_gradient(params, cache, ctx, node, &mut out)?;
    Ok(out)
}

/// Writes the single-node gradient into `out`, which must be zeroed and
/// shape-congruent with `params`.
pub(crate) fn accumulate_node_gradient(
    params: &ClassifierParams,
    cache: &ClassifierCache,
    ctx: &GraphContext,
    node: usize,
    out: &mut ClassifierParams,
) -> Result<(), NnError> {
    if node >= ctx.num_nodes() {
        return Err(NnError::NodeOutOfRange(node));
    }
    if !cache.is_fresh_for(params) {
        return Err(NnError::StaleCache("classifier"));
    }
    let y = f64::from(ctx.graph().label(node).ok_or(NnError::Unlabeled(node))?);
    let g = sigmoid(cache.logits[node]) - y;

    out.head.scaled_add(g, &cache.h.row(node));
    let mut dz2 = params.head.mapv(|w| g * w);
    for (d, &z) in dz2.iter_mut().zip(cache.z2.row(node)) {
        if z <= 0.0 {
            *d = 0.0;
        }
    }
    out.b2 += &dz2;
    let ah1 = cache.ah1.row(node);
    for (i, &a) in ah1.iter().enumerate() {
        if a != 0.0 {
            out.w2.row_mut(i).scaled_add(a, &dz2);
        }
    }

    // ∂L/∂H1[u] = Â[node][u] · W2 dZ2[node]
    let back = params.w2.dot(&dz2);
    let ax = ctx.propagated_features();
    let (cols, vals) = ctx.adj().row(node);
    for (&u, &a) in cols.iter().zip(vals) {
        let mut dz1 = back.mapv(|b| a * b);
        for (d, &z) in dz1.iter_mut().zip(cache.z1.row(u)) {
            if z <= 0.0 {
                *d = 0.0;
            }
        }
        out.b1 += &dz1;
        for (k, &x) in ax.row(u).iter().enumerate() {
            if x != 0.0 {
                out.w1.row_mut(k).scaled_add(x, &dz1);
            }
        }
    }
    Ok(())
}

/// Gradient of the BCE of one labeled node with respect to the classifier.
pub fn per_node_loss_gradient(
    params: &ClassifierParams,
    ctx: &GraphContext,
    node: usize,
) -> Result<ClassifierParams, NnError> {
    if node >= ctx.num_nodes() {
        return Err(NnError::NodeOutOfRange(node));
    }
    if ctx.graph().label(node).is_none() {
        return Err(NnError::Unlabeled(node));
    }
    let cache = classifier_forward(params, ctx)?;
    per_node_gradient_from_cache(params, &cache, ctx, node)
}
