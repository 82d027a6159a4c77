//! One seed of the full pipeline on the biased synthetic graph: estimator
//! pre-training, fair training, unlearning the forget split, and test-set
//! fairness before and after.
//!
//!     cargo run --release --example synthetic_pipeline -- [key=value ...]

use fair_unlearn::experiment::{load_graph, train_phase, unlearn_phase, ExperimentConfig};
use fair_unlearn::metrics::evaluate_classifier;
use fair_unlearn::nn::GraphContext;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FAIR_UNLEARN_LOG", "info")).init();
    let mut config = ExperimentConfig::default();
    for assignment in std::env::args().skip(1) {
        config.set(&assignment)?;
    }
    let ctx = GraphContext::new(load_graph(&config)?);

    let trained = train_phase(&config, &ctx, config.variant, config.seed)?;
    if let Some(fit) = &trained.estimator {
        println!(
            "estimator: loss {:.4} -> {:.4} on {} nodes with a known attribute",
            fit.initial_loss(),
            fit.final_loss(),
            trained.masks.sensitive_known_ids.len()
        );
    }
    let last = trained.model.log.last().expect("at least one epoch");
    println!(
        "trained {} epochs: L_C {:.4}  L_E {:.4}  L_R {:.4}  L_A {:.4}",
        trained.model.log.len(),
        last.classification,
        last.estimator,
        last.covariance,
        last.adversary
    );
    let before = evaluate_classifier(&trained.model.params.classifier, &ctx, &trained.masks.test_ids)?;

    let outcome = unlearn_phase(&config, &ctx, &trained)?;
    let reduced = GraphContext::new(outcome.graph.clone());
    let after = evaluate_classifier(&outcome.params.classifier, &reduced, &outcome.masks.test_ids)?;
    println!(
        "forgot {} nodes, dampened {} parameters",
        trained.masks.forget_ids.len(),
        outcome.num_dampened()
    );
    println!("             accuracy   ΔSP      ΔEO");
    for (name, r) in [("before", &before), ("after", &after)] {
        println!("{name:<12} {:.4}     {:.4}   {:.4}", r.accuracy, r.delta_sp, r.delta_eo);
    }
    Ok(())
}
