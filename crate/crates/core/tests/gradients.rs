//! Analytic gradients against central finite differences.

mod common;

use common::{numeric_gradient, objective_value, relative_errors, setup, REL_TOL};
use fair_unlearn::fixtures::eight_node_graph;
use fair_unlearn::nn::{
    per_node_gradient_from_cache, per_node_loss_gradient, classifier_forward, loss, GraphContext,
    LossWeights, ModelDims, ModelParams, Objective, ParamGroup,
};

fn compare(label: &str, analytic: &[f64], numeric: &[f64]) -> usize {
    let errors = relative_errors(analytic, numeric);
    for &(i, rel) in &errors {
        assert!(
            rel <= REL_TOL,
            "{label}[{i}]: analytic {:e} vs numeric {:e} (rel {rel:e})",
            analytic[i],
            numeric[i]
        );
    }
    errors.len()
}

fn check_all_groups(weights: LossWeights, seed: u64) -> usize {
    let (ctx, params, obj) = setup(seed);
    let state = obj.forward(&params, &ctx).unwrap();
    let grads = obj.backprop(&params, &state, &ctx, &weights).unwrap();
    let f = |p: &ModelParams| objective_value(p, &ctx, &obj, &weights);

    let mut checked = 0;
    let num_c = numeric_gradient(
        &params,
        |p| &p.classifier,
        |p, flat| p.classifier.set_flat(flat).unwrap(),
        f,
    );
    checked += compare("classifier", &grads.classifier.to_flat(), &num_c);
    let num_e = numeric_gradient(
        &params,
        |p| &p.estimator,
        |p, flat| p.estimator.set_flat(flat).unwrap(),
        f,
    );
    checked += compare("estimator", &grads.estimator.to_flat(), &num_e);
    let num_a = numeric_gradient(
        &params,
        |p| &p.adversary,
        |p, flat| p.adversary.set_flat(flat).unwrap(),
        f,
    );
    checked += compare("adversary", &grads.adversary.to_flat(), &num_a);
    checked
}

#[test]
fn classification_term() {
    for seed in 0..3 {
        assert!(check_all_groups(LossWeights::classification(), seed) > 10);
    }
}

#[test]
fn estimator_term() {
    for seed in 0..3 {
        assert!(check_all_groups(LossWeights::estimator(), seed) > 5);
    }
}

#[test]
fn covariance_term() {
    for seed in 0..3 {
        assert!(check_all_groups(LossWeights::covariance(), seed) > 10);
    }
}

#[test]
fn adversary_term() {
    for seed in 0..3 {
        assert!(check_all_groups(LossWeights::adversary(), seed) > 10);
    }
}

#[test]
fn combined_generator_objective() {
    for seed in 0..3 {
        assert!(check_all_groups(LossWeights::generator(0.7, 2.5), seed) > 20);
    }
}

#[test]
fn zero_weights_give_zero_gradients() {
    let (ctx, params, obj) = setup(0);
    let state = obj.forward(&params, &ctx).unwrap();
    let grads = obj.backprop(&params, &state, &ctx, &LossWeights::ZERO).unwrap();
    assert!(grads.classifier.to_flat().iter().all(|&g| g == 0.0));
    assert!(grads.estimator.to_flat().iter().all(|&g| g == 0.0));
    assert!(grads.adversary.to_flat().iter().all(|&g| g == 0.0));
}

#[test]
fn covariance_vanishes_for_constant_predictions() {
    let (ctx, mut params, obj) = setup(1);
    params.classifier.head.fill(0.0);
    let state = obj.forward(&params, &ctx).unwrap();
    let grads = obj.backprop(&params, &state, &ctx, &LossWeights::covariance()).unwrap();
    assert_eq!(obj.losses(&state).covariance(), Some(0.0));
    assert!(grads.classifier.to_flat().iter().all(|&g| g == 0.0));
}

#[test]
fn stale_cache_is_rejected() {
    let (ctx, mut params, obj) = setup(2);
    let state = obj.forward(&params, &ctx).unwrap();
    params.classifier.w1[[0, 0]] += 1.0;
    assert!(obj.backprop(&params, &state, &ctx, &LossWeights::classification()).is_err());
}

#[test]
fn per_node_gradient_matches_finite_differences() {
    let (ctx, params, _) = setup(4);
    let labeled: Vec<usize> = (0..8).collect();
    for node in labeled {
        let analytic = per_node_loss_gradient(&params.classifier, &ctx, node).unwrap();
        let y = f64::from(ctx.graph().label(node).unwrap());
        let f = |p: &ModelParams| {
            let cache = classifier_forward(&p.classifier, &ctx).unwrap();
            loss::bce(cache.probs[node], y)
        };
        let numeric = numeric_gradient(
            &params,
            |p| &p.classifier,
            |p, flat| p.classifier.set_flat(flat).unwrap(),
            f,
        );
        compare(&format!("node {node}"), &analytic.to_flat(), &numeric);
    }
}

#[test]
fn per_node_gradient_matches_full_backprop() {
    // independent route: full-graph backprop of a one-node objective
    let (ctx, params, _) = setup(5);
    let cache = classifier_forward(&params.classifier, &ctx).unwrap();
    for node in 0..8 {
        let local = per_node_gradient_from_cache(&params.classifier, &cache, &ctx, node).unwrap();
        let obj = Objective::new(&ctx, &[node], &[], &[]).unwrap();
        let state = obj.forward(&params, &ctx).unwrap();
        let full = obj
            .backprop(&params, &state, &ctx, &LossWeights::classification())
            .unwrap();
        for (a, b) in local.to_flat().iter().zip(full.classifier.to_flat()) {
            assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()), "{a} vs {b}");
        }
    }
}

#[test]
fn per_node_gradient_is_deterministic_and_vanishes_at_perfect_fit() {
    let (ctx, mut params, _) = setup(6);
    let a = per_node_loss_gradient(&params.classifier, &ctx, 3).unwrap();
    let b = per_node_loss_gradient(&params.classifier, &ctx, 3).unwrap();
    assert_eq!(a.to_flat(), b.to_flat());

    // push the logit of node 0 (label 1) far positive
    let cache = classifier_forward(&params.classifier, &ctx).unwrap();
    let h0 = cache.h.row(0).to_owned();
    assert!(h0.iter().any(|&v| v > 0.0), "fixture node needs an active representation");
    let norm2 = h0.dot(&h0);
    params.classifier.head = h0.mapv(|v| v * 60.0 / norm2);
    let g = per_node_loss_gradient(&params.classifier, &ctx, 0).unwrap();
    assert!(g.l2_norm() < 1e-6, "{}", g.l2_norm());
}

#[test]
fn unlabeled_node_is_rejected() {
    let graph = eight_node_graph();
    let mut labels = graph.labels().to_vec();
    labels[2] = None;
    let ctx = GraphContext::new(graph.with_labels(labels).unwrap());
    let params = ModelParams::init(ModelDims::new(4, 3, 3, 3), 0);
    assert!(per_node_loss_gradient(&params.classifier, &ctx, 2).is_err());
}
