//! Trains a model, then serves a deletion request for a handful of nodes
//! named by id: which parameters get dampened, by how much, and what the
//! graph looks like afterwards.
//!
//!     cargo run --release --example unlearn_request -- [gamma] [lambda]

use fair_unlearn::experiment::{load_graph, train_phase, ExperimentConfig, Variant};
use fair_unlearn::nn::{GraphContext, ParamGroup};
use fair_unlearn::unlearn::{apply_unlearning, UnlearnRequest};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FAIR_UNLEARN_LOG", "warn")).init();
    let mut args = std::env::args().skip(1);
    let gamma: f64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(2.0);
    let lambda: f64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(1.0);

    let config = ExperimentConfig {
        synthetic_nodes: 600,
        ..ExperimentConfig::default()
    };
    let ctx = GraphContext::new(load_graph(&config)?);
    let trained = train_phase(&config, &ctx, Variant::Full, 0)?;

    // the first ten training nodes ask to be forgotten
    let forget: Vec<usize> = trained.masks.train_ids.iter().take(10).copied().collect();
    let names: Vec<&str> = forget.iter().map(|&v| ctx.graph().node_id(v)).collect();
    println!("forgetting {names:?}");

    let request = UnlearnRequest {
        forget_ids: forget,
        gamma,
        lambda,
    };
    let outcome = apply_unlearning(
        &trained.model.params,
        &ctx,
        &trained.masks,
        &trained.train_importance,
        &request,
    )?;

    let total = trained.model.params.classifier.num_params();
    println!(
        "gamma {gamma}, lambda {lambda}: dampened {} of {total} classifier parameters",
        outcome.num_dampened()
    );
    let t = trained.train_importance.to_flat();
    let f = outcome.forget_importance.as_ref().map(|m| m.to_flat()).unwrap_or_default();
    for (&i, &dp) in outcome.plan.selected.iter().zip(&outcome.plan.factors).take(8) {
        println!("  param {i:>4}: I_train {:.3e}  I_forget {:.3e}  factor {dp:.3}", t[i], f[i]);
    }
    println!(
        "graph: {} -> {} nodes, {} -> {} edges",
        ctx.num_nodes(),
        outcome.graph.num_nodes(),
        ctx.graph().num_edges(),
        outcome.graph.num_edges()
    );
    assert!(names.iter().all(|id| outcome.graph.index_of(id).is_none()));
    Ok(())
}
