//! Command-line front end: train, unlearn, evaluate, reproduce.
//!
//! Verbosity comes from `FAIR_UNLEARN_LOG` (`error`, `warn`, `info`,
//! `debug`); everything else is a flag or a config key.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fair_unlearn::checkpoint::Checkpoint;
use fair_unlearn::experiment::{
    emit_markdown, emit_report, load_graph, run_experiment_on, train_phase, ExperimentConfig,
    ReportFormat, Variant,
};
use fair_unlearn::graph::io::write_dataset;
use fair_unlearn::metrics::evaluate_classifier;
use fair_unlearn::nn::GraphContext;
use fair_unlearn::unlearn::{apply_unlearning, UnlearnRequest};
use fair_unlearn::{Error, Result};

#[derive(Parser)]
#[command(name = "fair-unlearn", version, about = "Fairness-aware node unlearning for GCNs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat TOML config; built-in defaults apply to missing keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `synthetic` or a directory with edges.txt and nodes.csv.
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    variant: Option<String>,
    /// Config override, `key=value`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut config = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        for assignment in &self.overrides {
            config.set(assignment)?;
        }
        if let Some(dataset) = &self.dataset {
            config.dataset = dataset.clone();
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(variant) = &self.variant {
            config.variant = variant.parse()?;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Split, pre-train the estimator, train, and save a checkpoint.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Remove nodes from a trained model and its graph.
    Unlearn {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Node ids to forget, one per line; defaults to the checkpoint's
        /// forget split.
        #[arg(long)]
        forget: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Accuracy and group fairness of a checkpoint on its test split.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full repeated-seed experiment for one variant, or all three.
    Reproduce {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn train(common: &Common, out: &Path) -> Result<()> {
    let config = common.resolve()?;
    create_dir(out)?;
    let ctx = GraphContext::new(load_graph(&config)?);
    let trained = train_phase(&config, &ctx, config.variant, config.seed)?;
    let ckpt = Checkpoint {
        params: trained.model.params.clone(),
        train_importance: Some(trained.train_importance.clone()),
        masks: Some(trained.masks.clone()),
    };
    ckpt.save(out.join("checkpoint.json"))?;
    trained.model.write_log(out.join("training_log.csv"))?;
    let report = evaluate_classifier(&ckpt.params.classifier, &ctx, &trained.masks.test_ids)?;
    println!(
        "trained {} ({} epochs): test accuracy {:.4}, ΔSP {:.4}, ΔEO {:.4}",
        config.variant,
        trained.model.log.len(),
        report.accuracy,
        report.delta_sp,
        report.delta_eo
    );
    Ok(())
}

fn read_forget_ids(path: &Path, ctx: &GraphContext) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .map(|(i, line)| (i, line.trim()))
        .filter(|(_, line)| !line.is_empty() && !line.starts_with('#'))
        .map(|(i, id)| {
            ctx.graph().index_of(id).ok_or_else(|| Error::Parse {
                path: path.to_path_buf(),
                line: i as u64 + 1,
                message: format!("unknown node id `{id}`"),
            })
        })
        .collect()
}

fn unlearn(common: &Common, checkpoint: &Path, forget: Option<&Path>, out: &Path) -> Result<()> {
    let config = common.resolve()?;
    create_dir(out)?;
    let ctx = GraphContext::new(load_graph(&config)?);
    let ckpt = Checkpoint::load(checkpoint)?;
    let masks = ckpt
        .masks
        .clone()
        .ok_or_else(|| Error::Unlearning("checkpoint has no split".into()))?;
    let train_importance = ckpt
        .train_importance
        .as_ref()
        .ok_or_else(|| Error::Unlearning("checkpoint has no training importance".into()))?;
    let forget_ids = match forget {
        Some(path) => read_forget_ids(path, &ctx)?,
        None => masks.forget_ids.clone(),
    };
    let request = UnlearnRequest {
        forget_ids,
        gamma: config.gamma,
        lambda: config.lambda,
    };
    let outcome = apply_unlearning(&ckpt.params, &ctx, &masks, train_importance, &request)?;
    let reduced = GraphContext::new(outcome.graph.clone());
    let train_importance = fair_unlearn::unlearn::compute_importance(
        &outcome.params.classifier,
        &reduced,
        &outcome.masks.train_ids,
        fair_unlearn::unlearn::ImportanceSource::Train,
    )?;
    Checkpoint {
        params: outcome.params.clone(),
        train_importance: Some(train_importance),
        masks: Some(outcome.masks.clone()),
    }
    .save(out.join("checkpoint.json"))?;
    write_dataset(&outcome.graph, out.join("edges.txt"), out.join("nodes.csv"))?;
    let report = evaluate_classifier(&outcome.params.classifier, &reduced, &outcome.masks.test_ids)?;
    println!(
        "removed {} nodes, dampened {} parameters: test accuracy {:.4}, ΔSP {:.4}, ΔEO {:.4}",
        request.forget_ids.len(),
        outcome.num_dampened(),
        report.accuracy,
        report.delta_sp,
        report.delta_eo
    );
    Ok(())
}

fn evaluate(common: &Common, checkpoint: &Path, out: Option<&Path>) -> Result<()> {
    let config = common.resolve()?;
    let ctx = GraphContext::new(load_graph(&config)?);
    let ckpt = Checkpoint::load(checkpoint)?;
    let masks = ckpt
        .masks
        .as_ref()
        .ok_or_else(|| Error::Config("checkpoint has no split".into()))?;
    let report = evaluate_classifier(&ckpt.params.classifier, &ctx, &masks.test_ids)?;
    let text = serde_json::to_string_pretty(&report)? + "\n";
    match out {
        Some(path) => fs::write(path, &text).map_err(|e| Error::io(path, e))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn reproduce(common: &Common, out: &Path) -> Result<()> {
    let config = common.resolve()?;
    create_dir(out)?;
    let variants = match &common.variant {
        Some(_) => vec![config.variant],
        None => Variant::ALL.to_vec(),
    };
    let graph = load_graph(&config)?;
    let mut bundles = Vec::new();
    for variant in variants {
        let config = ExperimentConfig {
            variant,
            ..config.clone()
        };
        let bundle = run_experiment_on(&config, graph.clone())?;
        for format in [ReportFormat::Json, ReportFormat::Csv] {
            emit_report(&bundle, format, out.join(format!("report-{variant}.{}", format.extension())))?;
        }
        bundle.timings.write(out.join(format!("timings-{variant}.json")))?;
        if bundle.partial {
            log::warn!("{variant}: some seeds failed, see report-{variant}.json");
        }
        bundles.push(bundle);
    }
    emit_markdown(&bundles, out.join("summary.md"))?;
    print!("{}", fair_unlearn::experiment::render_markdown(&bundles));
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FAIR_UNLEARN_LOG", "warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Train { common, out } => train(common, out),
        Command::Unlearn {
            common,
            checkpoint,
            forget,
            out,
        } => unlearn(common, checkpoint, forget.as_deref(), out),
        Command::Evaluate {
            common,
            checkpoint,
            out,
        } => evaluate(common, checkpoint, out.as_deref()),
        Command::Reproduce { common, out } => reproduce(common, out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
