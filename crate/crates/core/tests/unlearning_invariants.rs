//! Properties of parameter selection and dampening over random importance
//! maps, plus the end-to-end behaviour of an unlearning request.

use fair_unlearn::fixtures::{eight_node_graph, eight_node_masks};
use fair_unlearn::nn::{ClassifierParams, GraphContext, ModelDims, ModelParams, ParamGroup};
use fair_unlearn::unlearn::{
    apply_dampening, apply_unlearning, compute_dampening, compute_importance, select_parameters,
    ImportanceMap, ImportanceSource, UnlearnRequest,
};
use proptest::prelude::*;

fn dims() -> ModelDims {
    ModelDims::new(4, 3, 3, 3)
}

fn num_params() -> usize {
    ClassifierParams::zeros(&dims()).num_params()
}

fn map(values: &[f64], source: ImportanceSource) -> ImportanceMap {
    let mut p = ClassifierParams::zeros(&dims());
    p.set_flat(values).unwrap();
    ImportanceMap {
        values: p,
        source_set_size: 1,
        source,
    }
}

/// Importance entries: exact zeros are common, the rest span several
/// orders of magnitude.
fn importance() -> impl Strategy<Value = Vec<f64>> {
    let entry = prop_oneof![1 => Just(0.0), 4 => (-8.0f64..2.0).prop_map(|e| 10f64.powf(e))];
    prop::collection::vec(entry, num_params())
}

fn weights() -> impl Strategy<Value = Vec<f64>> {
    let entry = prop_oneof![1 => Just(0.0), 8 => -3.0f64..3.0];
    prop::collection::vec(entry, num_params())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn factors_lie_in_unit_interval(
        t in importance(),
        f in importance(),
        gamma in 0.0f64..10.0,
        lambda in 1e-3f64..10.0,
    ) {
        let (t, f) = (map(&t, ImportanceSource::Train), map(&f, ImportanceSource::Forget));
        let selected = select_parameters(&t, &f, gamma).unwrap();
        let plan = compute_dampening(&t, &f, &selected, lambda).unwrap();
        prop_assert_eq!(plan.selected.len(), selected.iter().filter(|&&s| s).count());
        for &dp in &plan.factors {
            prop_assert!((0.0..=1.0).contains(&dp), "dp = {}", dp);
        }
        // dp is zero only where the parameter carried no training importance
        for (&i, &dp) in plan.selected.iter().zip(&plan.factors) {
            prop_assert_eq!(dp == 0.0, t.to_flat()[i] == 0.0);
        }
    }

    #[test]
    fn dampening_never_grows_a_parameter(
        t in importance(),
        f in importance(),
        theta in weights(),
        gamma in 0.0f64..10.0,
        lambda_share in 1e-3f64..1.0,
    ) {
        // lambda <= gamma keeps every selected factor strictly below one
        let lambda = (gamma * lambda_share).max(1e-12);
        let (tm, fm) = (map(&t, ImportanceSource::Train), map(&f, ImportanceSource::Forget));
        let selected = select_parameters(&tm, &fm, gamma).unwrap();
        let plan = compute_dampening(&tm, &fm, &selected, lambda).unwrap();
        let mut params = ClassifierParams::zeros(&dims());
        params.set_flat(&theta).unwrap();
        let after = apply_dampening(&params, &plan).unwrap().to_flat();
        for i in 0..theta.len() {
            if selected[i] {
                prop_assert!(after[i].abs() <= theta[i].abs());
                if theta[i] != 0.0 {
                    prop_assert!(after[i].abs() < theta[i].abs(), "selected {} unchanged", i);
                }
            } else {
                prop_assert_eq!(after[i].to_bits(), theta[i].to_bits());
            }
        }
    }

    #[test]
    fn selection_shrinks_as_gamma_grows(
        t in importance(),
        f in importance(),
        g1 in 0.0f64..10.0,
        dg in 0.0f64..10.0,
    ) {
        let (t, f) = (map(&t, ImportanceSource::Train), map(&f, ImportanceSource::Forget));
        let loose = select_parameters(&t, &f, g1).unwrap();
        let strict = select_parameters(&t, &f, g1 + dg).unwrap();
        for (a, b) in loose.iter().zip(&strict) {
            prop_assert!(!b || *a);
        }
    }

    #[test]
    fn factors_grow_with_lambda(
        t in importance(),
        f in importance(),
        gamma in 0.0f64..10.0,
        l1 in 1e-3f64..10.0,
        dl in 0.0f64..10.0,
    ) {
        let (t, f) = (map(&t, ImportanceSource::Train), map(&f, ImportanceSource::Forget));
        let selected = select_parameters(&t, &f, gamma).unwrap();
        let low = compute_dampening(&t, &f, &selected, l1).unwrap();
        let high = compute_dampening(&t, &f, &selected, l1 + dl).unwrap();
        prop_assert_eq!(&low.selected, &high.selected);
        for (a, b) in low.factors.iter().zip(&high.factors) {
            prop_assert!(a <= b);
        }
    }
}

#[test]
fn non_positive_lambda_is_rejected() {
    let t = map(&vec![1.0; num_params()], ImportanceSource::Train);
    let f = map(&vec![3.0; num_params()], ImportanceSource::Forget);
    let selected = select_parameters(&t, &f, 1.0).unwrap();
    assert!(compute_dampening(&t, &f, &selected, 0.0).is_err());
    assert!(compute_dampening(&t, &f, &selected, -1.0).is_err());
    assert!(select_parameters(&t, &f, -0.5).is_err());
}

fn trained_fixture() -> (GraphContext, ModelParams, ImportanceMap) {
    let ctx = GraphContext::new(eight_node_graph());
    let params = ModelParams::init(dims(), 11);
    let masks = eight_node_masks();
    let train = compute_importance(&params.classifier, &ctx, &masks.train_ids, ImportanceSource::Train).unwrap();
    (ctx, params, train)
}

#[test]
fn empty_request_is_a_bitwise_no_op() {
    let (ctx, params, train) = trained_fixture();
    let masks = eight_node_masks();
    let request = UnlearnRequest {
        forget_ids: vec![],
        gamma: 1.0,
        lambda: 1.0,
    };
    let out = apply_unlearning(&params, &ctx, &masks, &train, &request).unwrap();
    let bits = |p: &ModelParams| {
        let mut v: Vec<u64> = p.classifier.to_flat().iter().map(|x| x.to_bits()).collect();
        v.extend(p.estimator.to_flat().iter().map(|x| x.to_bits()));
        v.extend(p.adversary.to_flat().iter().map(|x| x.to_bits()));
        v
    };
    assert_eq!(bits(&out.params), bits(&params));
    assert_eq!(out.graph.num_nodes(), ctx.num_nodes());
    assert_eq!(out.graph.num_edges(), ctx.graph().num_edges());
    assert_eq!(out.num_dampened(), 0);
}

#[test]
fn request_removes_nodes_and_only_touches_the_classifier() {
    let (ctx, params, train) = trained_fixture();
    let masks = eight_node_masks();
    let request = UnlearnRequest {
        forget_ids: masks.forget_ids.clone(),
        gamma: 0.5,
        lambda: 0.5,
    };
    let out = apply_unlearning(&params, &ctx, &masks, &train, &request).unwrap();
    assert_eq!(out.graph.num_nodes(), 6);
    assert!(out.graph.index_of("n2").is_none() && out.graph.index_of("n5").is_none());
    assert_eq!(out.params.estimator.to_flat(), params.estimator.to_flat());
    assert_eq!(out.params.adversary.to_flat(), params.adversary.to_flat());
    assert!(out.num_dampened() > 0);
    let again = apply_unlearning(&params, &ctx, &masks, &train, &request).unwrap();
    assert_eq!(again.params.classifier.to_flat(), out.params.classifier.to_flat());
}
