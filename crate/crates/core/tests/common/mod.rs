//! Helpers shared by the integration test binaries.
#![allow(dead_code)]

use fair_unlearn::fixtures::{eight_node_graph, eight_node_masks};
use fair_unlearn::nn::{GraphContext, LossWeights, ModelDims, ModelParams, Objective, ParamGroup};

pub const EPS: f64 = 1e-4;
pub const REL_TOL: f64 = 1e-4;
pub const FLOOR: f64 = 1e-8;

/// The eight-node fixture with d=4, hidden=3 and a fixed estimated partition.
pub fn setup(seed: u64) -> (GraphContext, ModelParams, Objective) {
    let ctx = GraphContext::new(eight_node_graph());
    let params = ModelParams::init(ModelDims::new(4, 3, 3, 3), seed);
    let mut obj = Objective::from_masks(&ctx, &eight_node_masks()).unwrap();
    obj.set_partition(vec![0, 0, 0, 0, 1, 1, 1, 1]).unwrap();
    (ctx, params, obj)
}

pub fn objective_value(params: &ModelParams, ctx: &GraphContext, obj: &Objective, w: &LossWeights) -> f64 {
    let state = obj.forward(params, ctx).unwrap();
    obj.losses(&state).weighted(w)
}

/// Central differences of `f` over every entry of one parameter group.
pub fn numeric_gradient<P: ParamGroup>(
    params: &ModelParams,
    get: impl Fn(&ModelParams) -> &P,
    set: impl Fn(&mut ModelParams, &[f64]),
    f: impl Fn(&ModelParams) -> f64,
) -> Vec<f64> {
    let base = get(params).to_flat();
    (0..base.len())
        .map(|i| {
            let mut plus = params.clone();
            let mut flat = base.clone();
            flat[i] += EPS;
            set(&mut plus, &flat);
            let mut minus = params.clone();
            flat[i] -= 2.0 * EPS;
            set(&mut minus, &flat);
            (f(&plus) - f(&minus)) / (2.0 * EPS)
        })
        .collect()
}

/// Relative errors of the entries whose magnitude reaches [`FLOOR`].
pub fn relative_errors(analytic: &[f64], numeric: &[f64]) -> Vec<(usize, f64)> {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .enumerate()
        .filter(|(_, (a, n))| a.abs() >= FLOOR || n.abs() >= FLOOR)
        .map(|(i, (a, n))| (i, (a - n).abs() / a.abs().max(n.abs())))
        .collect()
}

/// Relative errors of all three parameter groups of `weights` at `seed`.
pub fn gradient_errors(weights: &LossWeights, seed: u64) -> Vec<(&'static str, usize, f64)> {
    let (ctx, params, obj) = setup(seed);
    let state = obj.forward(&params, &ctx).unwrap();
    let grads = obj.backprop(&params, &state, &ctx, weights).unwrap();
    let f = |p: &ModelParams| objective_value(p, &ctx, &obj, weights);
    let mut out = Vec::new();
    let num = numeric_gradient(&params, |p| &p.classifier, |p, x| p.classifier.set_flat(x).unwrap(), f);
    out.extend(relative_errors(&grads.classifier.to_flat(), &num).into_iter().map(|(i, e)| ("classifier", i, e)));
    let num = numeric_gradient(&params, |p| &p.estimator, |p, x| p.estimator.set_flat(x).unwrap(), f);
    out.extend(relative_errors(&grads.estimator.to_flat(), &num).into_iter().map(|(i, e)| ("estimator", i, e)));
    let num = numeric_gradient(&params, |p| &p.adversary, |p, x| p.adversary.set_flat(x).unwrap(), f);
    out.extend(relative_errors(&grads.adversary.to_flat(), &num).into_iter().map(|(i, e)| ("adversary", i, e)));
    out
}

/// Every binary vector of length `n`, as the bits of 0..2^n.
pub fn binary_vectors(n: usize) -> impl Iterator<Item = Vec<u8>> {
    (0u32..1 << n).map(move |bits| (0..n).map(|i| ((bits >> i) & 1) as u8).collect())
}

/// Statistical parity by direct counting.
pub fn brute_sp(preds: &[u8], groups: &[u8]) -> f64 {
    let rate = |g: u8| {
        let members: Vec<u8> = preds.iter().zip(groups).filter(|(_, &s)| s == g).map(|(&p, _)| p).collect();
        members.iter().filter(|&&p| p == 1).count() as f64 / members.len() as f64
    };
    (rate(0) - rate(1)).abs()
}

/// Equal opportunity by direct counting; `None` if a group has no positives.
pub fn brute_eo(preds: &[u8], labels: &[u8], groups: &[u8]) -> Option<f64> {
    let tpr = |g: u8| {
        let (mut pos, mut hit) = (0usize, 0usize);
        for i in 0..preds.len() {
            if groups[i] == g && labels[i] == 1 {
                pos += 1;
                hit += usize::from(preds[i] == 1);
            }
        }
        (pos > 0).then(|| hit as f64 / pos as f64)
    };
    Some((tpr(0)? - tpr(1)?).abs())
}
