//! Fisher-style parameter importance and selective dampening.
//!
//! The importance of a parameter for a node set is the mean over the set of
//! the squared derivative of each node's cross-entropy. Parameters that
//! matter much more to the forget set than to the training set are shrunk
//! towards zero in proportion to that ratio.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Graph, SplitMasks};
use crate::nn::{
    accumulate_node_gradient, classifier_forward, ClassifierCache, ClassifierParams, GraphContext,
    ModelParams, ParamGroup,
};

/// Nodes per work unit. Chunk sums are combined in chunk order, so the
/// result does not depend on the number of threads.
const CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportanceSource {
    Train,
    Forget,
    Retain,
    Other,
}

/// Per-parameter importance, shaped like the classifier parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ImportanceMap {
    pub values: ClassifierParams,
    pub source_set_size: usize,
    pub source: ImportanceSource,
}

impl ImportanceMap {
    pub fn to_flat(&self) -> Vec<f64> {
        self.values.to_flat()
    }
}

fn chunk_sum(
    params: &ClassifierParams,
    cache: &ClassifierCache,
    ctx: &GraphContext,
    nodes: &[usize],
) -> Result<Vec<f64>> {
    let zero = params.zeros_like();
    let mut sum = vec![0.0; zero.num_params()];
    let mut grad = zero.clone();
    for &v in nodes {
        grad.clone_from(&zero);
        accumulate_node_gradient(params, cache, ctx, v, &mut grad)?;
        let mut k = 0;
        for t in grad.tensors() {
            for &g in t {
                sum[k] += g * g;
                k += 1;
            }
        }
    }
    Ok(sum)
}

/// Mean squared per-node gradient of the classifier loss over `nodes`,
/// evaluated on the graph held by `ctx`.
pub fn compute_importance(
    params: &ClassifierParams,
    ctx: &GraphContext,
    nodes: &[usize],
    source: ImportanceSource,
) -> Result<ImportanceMap> {
    if nodes.is_empty() {
        return Err(Error::Unlearning(
            "importance of an empty node set is undefined".into(),
        ));
    }
    let cache = classifier_forward(params, ctx)?;
    let partial = nodes
        .par_chunks(CHUNK)
        .map(|chunk| chunk_sum(params, &cache, ctx, chunk))
        .collect::<Result<Vec<_>>>()?;
    let mut total = vec![0.0; params.num_params()];
    for part in &partial {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    let scale = nodes.len() as f64;
    for t in &mut total {
        *t /= scale;
    }
    let mut values = params.zeros_like();
    values.set_flat(&total)?;
    Ok(ImportanceMap {
        values,
        source_set_size: nodes.len(),
        source,
    })
}

/// Flat indices of the parameters chosen for dampening, with their factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DampeningPlan {
    pub selected: Vec<usize>,
    pub factors: Vec<f64>,
}

impl DampeningPlan {
    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }
}

fn check_congruent(a: &ImportanceMap, b: &ImportanceMap) -> Result<()> {
    if a.values.dims() != b.values.dims() {
        return Err(Error::Unlearning(
            "importance maps have different shapes".into(),
        ));
    }
    Ok(())
}

/// `I_forget[i] > gamma · I_train[i]`, elementwise over the flattened maps.
pub fn select_parameters(train: &ImportanceMap, forget: &ImportanceMap, gamma: f64) -> Result<Vec<bool>> {
    check_congruent(train, forget)?;
    if !(gamma >= 0.0) {
        return Err(Error::Config(format!("gamma = {gamma} must be non-negative")));
    }
    Ok(train
        .to_flat()
        .iter()
        .zip(forget.to_flat())
        .map(|(&t, f)| f > gamma * t)
        .collect())
}

/// Dampening factor `min(lambda · I_train / I_forget, 1)` for each selected
/// parameter.
pub fn compute_dampening(
    train: &ImportanceMap,
    forget: &ImportanceMap,
    selected: &[bool],
    lambda: f64,
) -> Result<DampeningPlan> {
    check_congruent(train, forget)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Config(format!(
            "lambda = {lambda} must be finite and positive"
        )));
    }
    let t = train.to_flat();
    let f = forget.to_flat();
    if selected.len() != t.len() {
        return Err(Error::Unlearning("selection mask has the wrong length".into()));
    }
    let mut plan = DampeningPlan {
        selected: Vec::new(),
        factors: Vec::new(),
    };
    for (i, _) in selected.iter().enumerate().filter(|(_, &s)| s) {
        if !(f[i] > 0.0) {
            return Err(Error::Unlearning(format!(
                "selected parameter {i} has zero forget importance"
            )));
        }
        plan.selected.push(i);
        plan.factors.push((lambda * t[i] / f[i]).min(1.0));
    }
    Ok(plan)
}

/// Multiplies the selected parameters by their factors.
pub fn apply_dampening(params: &ClassifierParams, plan: &DampeningPlan) -> Result<ClassifierParams> {
    let mut flat = params.to_flat();
    for (&i, &factor) in plan.selected.iter().zip(&plan.factors) {
        let slot = flat
            .get_mut(i)
            .ok_or_else(|| Error::Unlearning(format!("parameter index {i} out of range")))?;
        *slot *= factor;
    }
    let mut out = params.clone();
    out.set_flat(&flat)?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnlearnRequest {
    /// Node indices of the training graph.
    pub forget_ids: Vec<usize>,
    pub gamma: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone)]
pub struct UnlearnOutcome {
    pub params: ModelParams,
    /// The training graph with the forget nodes and their edges removed.
    pub graph: Graph,
    /// Split masks re-indexed for `graph`; the forget set is empty.
    pub masks: SplitMasks,
    pub forget_importance: Option<ImportanceMap>,
    pub plan: DampeningPlan,
}

impl UnlearnOutcome {
    pub fn num_dampened(&self) -> usize {
        self.plan.selected.len()
    }
}

/// Masks of the graph left after deleting `removed` (sorted) from a graph
/// of `n` nodes.
pub fn remap_masks(masks: &SplitMasks, n: usize, removed: &[usize]) -> SplitMasks {
    let mut new_index = vec![None; n];
    let mut next = 0;
    for (v, slot) in new_index.iter_mut().enumerate() {
        if removed.binary_search(&v).is_err() {
            *slot = Some(next);
            next += 1;
        }
    }
    let map = |ids: &[usize]| ids.iter().filter_map(|&v| new_index[v]).collect::<Vec<_>>();
    SplitMasks {
        train_ids: map(&masks.train_ids),
        val_ids: map(&masks.val_ids),
        test_ids: map(&masks.test_ids),
        sensitive_known_ids: map(&masks.sensitive_known_ids),
        forget_ids: Vec::new(),
    }
}

/// Removes `request.forget_ids` from the graph and dampens the classifier
/// parameters specialised to them. Forget-set importance is measured on
/// the original graph, where the forget nodes still exist.
pub fn apply_unlearning(
    model: &ModelParams,
    ctx: &GraphContext,
    masks: &SplitMasks,
    train_importance: &ImportanceMap,
    request: &UnlearnRequest,
) -> Result<UnlearnOutcome> {
    let mut forget = request.forget_ids.clone();
    forget.sort_unstable();
    forget.dedup();
    if let Some(&v) = forget
        .iter()
        .find(|v| masks.train_ids.binary_search(v).is_err())
    {
        return Err(Error::Unlearning(format!(
            "node {v} is not in the training set"
        )));
    }
    if train_importance.values.dims() != model.classifier.dims() {
        return Err(Error::Unlearning(
            "training importance does not match the model".into(),
        ));
    }
    if forget.is_empty() {
        return Ok(UnlearnOutcome {
            params: model.clone(),
            graph: ctx.graph().clone(),
            masks: remap_masks(masks, ctx.num_nodes(), &[]),
            forget_importance: None,
            plan: DampeningPlan {
                selected: Vec::new(),
                factors: Vec::new(),
            },
        });
    }

    let forget_importance =
        compute_importance(&model.classifier, ctx, &forget, ImportanceSource::Forget)?;
    let selected = select_parameters(train_importance, &forget_importance, request.gamma)?;
    let plan = compute_dampening(train_importance, &forget_importance, &selected, request.lambda)?;
    let mut params = model.clone();
    params.classifier = apply_dampening(&model.classifier, &plan)?;
    log::info!(
        "unlearning {} nodes: dampened {} of {} parameters",
        forget.len(),
        plan.selected.len(),
        model.classifier.num_params()
    );

    let graph = ctx.graph().delete_nodes(&forget)?;
    let masks = remap_masks(masks, ctx.num_nodes(), &forget);
    Ok(UnlearnOutcome {
        params,
        graph,
        masks,
        forget_importance: Some(forget_importance),
        plan,
    })
}
