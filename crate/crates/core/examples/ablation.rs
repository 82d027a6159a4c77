//! Runs the three pipeline variants on the biased synthetic graph and
//! prints a Markdown comparison table.
//!
//!     cargo run --release --example ablation -- [repeats] [key=value ...]

use fair_unlearn::experiment::{render_markdown, run_experiment_on, load_graph, ExperimentConfig, Variant};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FAIR_UNLEARN_LOG", "warn")).init();
    let mut config = ExperimentConfig::default();
    let mut args = std::env::args().skip(1).peekable();
    if let Some(repeats) = args.next_if(|a| !a.contains('=')) {
        config.repeats = repeats.parse()?;
    }
    for assignment in args {
        config.set(&assignment)?;
    }

    let graph = load_graph(&config)?;
    let mut bundles = Vec::new();
    for variant in Variant::ALL {
        config.variant = variant;
        let bundle = run_experiment_on(&config, graph.clone())?;
        eprintln!("{variant}: {:.1}s", bundle.timings.total_seconds);
        for r in &bundle.records {
            if let Some(m) = &r.metrics {
                eprintln!(
                    "  seed {}: acc {:.3} dsp {:.3} deo {:.3} | post acc {:.3} dsp {:.3} deo {:.3} | mia forget {:.3} -> {:.3} | dampened {}",
                    r.seed,
                    m.pre.accuracy,
                    m.pre.delta_sp,
                    m.pre.delta_eo,
                    m.post.accuracy,
                    m.post.delta_sp,
                    m.post.delta_eo,
                    m.mia_forget_pre.auc,
                    m.mia_forget_post.auc,
                    m.dampened
                );
            }
        }
        bundles.push(bundle);
    }
    print!("{}", render_markdown(&bundles));
    Ok(())
}
