//! End-to-end runs: split, estimator pre-training, fair training, unlearning
//! and evaluation, repeated over seeds and aggregated.

mod config;
mod report;

pub use config::{ExperimentConfig, Variant};
pub use report::{
    aggregate, emit_markdown, emit_report, read_report_csv, render_csv, render_json, render_markdown,
    Aggregate, ReportBundle, ReportFormat, Timings, REPORT_SCHEMA,
};

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimator::{train_estimator, EstimatorFit};
use crate::fair_train::{train_fair_gnn, TrainedModel};
use crate::graph::{io::ingest_dataset, io::IngestSummary, split_dataset, Graph, SplitMasks};
use crate::metrics::{evaluate_classifier, FairnessReport, MiaResult, ShadowAttack};
use crate::nn::{EstimatorParams, GraphContext};
use crate::unlearn::{
    apply_unlearning, compute_importance, ImportanceMap, ImportanceSource, UnlearnOutcome,
    UnlearnRequest,
};

/// Reads the dataset named by the config, or generates the synthetic graph.
pub fn load_graph(config: &ExperimentConfig) -> Result<Graph> {
    let graph = match config.dataset_paths() {
        Some((edges, nodes)) => ingest_dataset(edges, nodes)?,
        None => config.synthetic_spec().generate(config.synthetic_seed)?,
    };
    log::info!("dataset `{}`: {}", config.dataset, IngestSummary::of(&graph));
    Ok(graph)
}

/// Everything produced by the training phase of one seed.
#[derive(Debug, Clone)]
pub struct TrainPhase {
    pub masks: SplitMasks,
    pub estimator: Option<EstimatorFit>,
    pub model: TrainedModel,
    pub train_importance: ImportanceMap,
}

/// Split, estimator pre-training (skipped for `no_sae`), fair training and
/// the training-set importance.
pub fn train_phase(config: &ExperimentConfig, ctx: &GraphContext, variant: Variant, seed: u64) -> Result<TrainPhase> {
    let masks = split_dataset(ctx.graph(), &config.split_spec(), seed)?;
    let dims = config.dims(ctx.graph().num_features());
    let estimator = match variant {
        Variant::NoSae => None,
        Variant::Full | Variant::NoFc => Some(train_estimator(
            ctx,
            &masks,
            &dims,
            &config.estimator_config(),
            seed,
        )?),
    };
    let estimator_init = match &estimator {
        Some(fit) => fit.params.clone(),
        None => EstimatorParams::init(&dims, seed),
    };
    let model = train_fair_gnn(
        ctx,
        &masks,
        &estimator_init,
        dims,
        &config.hyperparams(variant),
        seed,
    )?;
    let train_importance = compute_importance(
        &model.params.classifier,
        ctx,
        &masks.train_ids,
        ImportanceSource::Train,
    )?;
    Ok(TrainPhase {
        masks,
        estimator,
        model,
        train_importance,
    })
}

/// Unlearns the split's forget set.
pub fn unlearn_phase(config: &ExperimentConfig, ctx: &GraphContext, trained: &TrainPhase) -> Result<UnlearnOutcome> {
    let request = UnlearnRequest {
        forget_ids: trained.masks.forget_ids.clone(),
        gamma: config.gamma,
        lambda: config.lambda,
    };
    apply_unlearning(
        &trained.model.params,
        ctx,
        &trained.masks,
        &trained.train_importance,
        &request,
    )
}

/// Metrics of one successful seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMetrics {
    /// Test-set fairness of the trained model on the original graph.
    pub pre: FairnessReport,
    /// Test-set fairness of the unlearned model on the reduced graph.
    pub post: FairnessReport,
    /// Forget set against test nodes, before and after unlearning.
    pub mia_forget_pre: MiaResult,
    pub mia_forget_post: MiaResult,
    /// Retained training nodes against test nodes.
    pub mia_train_pre: MiaResult,
    pub mia_train_post: MiaResult,
    pub forget_size: usize,
    pub dampened: usize,
    pub epochs_run: usize,
}

impl SeedMetrics {
    /// Named scalar metrics in report order.
    pub fn scalars(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("pre_accuracy", self.pre.accuracy),
            ("pre_delta_sp", self.pre.delta_sp),
            ("pre_delta_eo", self.pre.delta_eo),
            ("post_accuracy", self.post.accuracy),
            ("post_delta_sp", self.post.delta_sp),
            ("post_delta_eo", self.post.delta_eo),
            ("mia_forget_pre_auc", self.mia_forget_pre.auc),
            ("mia_forget_post_auc", self.mia_forget_post.auc),
            ("mia_train_pre_auc", self.mia_train_pre.auc),
            ("mia_train_post_auc", self.mia_train_post.auc),
            ("forget_size", self.forget_size as f64),
            ("dampened", self.dampened as f64),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub seed: u64,
    pub variant: Variant,
    pub metrics: Option<SeedMetrics>,
    pub error: Option<String>,
}

/// Membership-inference AUCs before and after unlearning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipAudit {
    pub forget_pre: MiaResult,
    pub forget_post: MiaResult,
    pub train_pre: MiaResult,
    pub train_post: MiaResult,
}

/// Attacks the trained and the unlearned classifier. Forget nodes are the
/// members of the headline audit, test nodes the nonmembers; a second
/// audit uses the retained training nodes as members. All queries run on
/// the original graph, where forget nodes still exist.
pub fn audit_membership(
    config: &ExperimentConfig,
    ctx: &GraphContext,
    trained: &TrainPhase,
    outcome: &UnlearnOutcome,
    seed: u64,
) -> Result<MembershipAudit> {
    let masks = &trained.masks;
    let exclude: Vec<usize> = masks.forget_ids.iter().chain(&masks.test_ids).copied().collect();
    let attack = ShadowAttack::fit(
        ctx,
        &exclude,
        config.dims(ctx.graph().num_features()),
        &config.shadow_config(),
        seed,
    )?;
    let retain = masks.retain_ids();
    let before = &trained.model.params.classifier;
    let after = &outcome.params.classifier;
    Ok(MembershipAudit {
        forget_pre: attack.evaluate(before, ctx, &masks.forget_ids, &masks.test_ids)?,
        forget_post: attack.evaluate(after, ctx, &masks.forget_ids, &masks.test_ids)?,
        train_pre: attack.evaluate(before, ctx, &retain, &masks.test_ids)?,
        train_post: attack.evaluate(after, ctx, &retain, &masks.test_ids)?,
    })
}

/// Runs one seed of one variant end to end.
pub fn run_seed(config: &ExperimentConfig, ctx: &GraphContext, variant: Variant, seed: u64) -> Result<SeedMetrics> {
    let trained = train_phase(config, ctx, variant, seed)?;
    let pre = evaluate_classifier(&trained.model.params.classifier, ctx, &trained.masks.test_ids)?;
    let outcome = unlearn_phase(config, ctx, &trained)?;
    let reduced = GraphContext::new(outcome.graph.clone());
    let post = evaluate_classifier(&outcome.params.classifier, &reduced, &outcome.masks.test_ids)?;
    let audit = audit_membership(config, ctx, &trained, &outcome, seed)?;
    Ok(SeedMetrics {
        pre,
        post,
        mia_forget_pre: audit.forget_pre,
        mia_forget_post: audit.forget_post,
        mia_train_pre: audit.train_pre,
        mia_train_post: audit.train_post,
        forget_size: trained.masks.forget_ids.len(),
        dampened: outcome.num_dampened(),
        epochs_run: trained.model.log.len(),
    })
}

/// Runs every seed of `config.variant` on `graph`. Seeds run in parallel;
/// records come back in seed order and a failed seed is recorded rather
/// than aborting the others.
pub fn run_experiment_on(config: &ExperimentConfig, graph: Graph) -> Result<ReportBundle> {
    config.validate()?;
    let ctx = GraphContext::new(graph);
    let start = Instant::now();
    let results: Vec<(SeedRecord, f64)> = config
        .seeds()
        .into_par_iter()
        .map(|seed| {
            let t = Instant::now();
            let outcome = run_seed(config, &ctx, config.variant, seed);
            if let Err(e) = &outcome {
                log::warn!("seed {seed} failed: {e}");
            }
            let record = SeedRecord {
                seed,
                variant: config.variant,
                error: outcome.as_ref().err().map(ToString::to_string),
                metrics: outcome.ok(),
            };
            (record, t.elapsed().as_secs_f64())
        })
        .collect();
    let timings = Timings {
        total_seconds: start.elapsed().as_secs_f64(),
        per_seed: results.iter().map(|(r, t)| (r.seed, *t)).collect(),
    };
    let records: Vec<SeedRecord> = results.into_iter().map(|(r, _)| r).collect();
    Ok(ReportBundle::new(config.clone(), records, timings))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ReportBundle> {
    run_experiment_on(config, load_graph(config)?)
}
