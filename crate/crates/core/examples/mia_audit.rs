//! Membership-inference audit of unlearning on a small graph the model
//! overfits. Prints the forget-set attack AUC before and after unlearning
//! for a few seeds.
//!
//!     cargo run --release --example mia_audit -- [key=value ...]

use fair_unlearn::experiment::{
    audit_membership, load_graph, train_phase, unlearn_phase, ExperimentConfig, Variant,
};
use fair_unlearn::nn::GraphContext;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FAIR_UNLEARN_LOG", "warn")).init();
    let mut config = ExperimentConfig {
        synthetic_nodes: 50,
        synthetic_features: 32,
        synthetic_avg_degree: 2.0,
        forget_fraction: 0.2,
        hidden: 32,
        output: 32,
        epochs: 300,
        lr_classifier: 0.02,
        patience: 0,
        shadow_epochs: 300,
        shadow_lr: 0.02,
        gamma: 1.0,
        lambda: 1.0,
        variant: Variant::NoFc,
        ..ExperimentConfig::default()
    };
    for assignment in std::env::args().skip(1) {
        config.set(&assignment)?;
    }
    let ctx = GraphContext::new(load_graph(&config)?);
    let mut closer = 0;
    for seed in config.seeds() {
        let trained = train_phase(&config, &ctx, config.variant, seed)?;
        let outcome = unlearn_phase(&config, &ctx, &trained)?;
        let audit = audit_membership(&config, &ctx, &trained, &outcome, seed)?;
        let (before, after) = (audit.forget_pre.auc, audit.forget_post.auc);
        let moved = (after - 0.5).abs() < (before - 0.5).abs();
        closer += usize::from(moved);
        println!(
            "seed {seed}: forget AUC {before:.3} -> {after:.3}  retained AUC {:.3} -> {:.3}  dampened {} (forget set {})",
            audit.train_pre.auc,
            audit.train_post.auc,
            outcome.num_dampened(),
            trained.masks.forget_ids.len(),
        );
    }
    println!("closer to 0.5 after unlearning in {closer} of {} seeds", config.repeats);
    Ok(())
}
