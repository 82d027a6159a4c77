//! Dense/sparse numeric engine: GCN forward passes, analytic gradients and
//! the Adam optimizer.

mod backward;
mod forward;
pub mod loss;
mod optim;
mod params;

pub use backward::{
    estimator_loss_and_gradient, per_node_gradient_from_cache, per_node_loss_gradient, ForwardState, Gradients, LossTerms,
    LossWeights, Objective,
};
pub(crate) use backward::accumulate_node_gradient;
pub use forward::{
    adversary_logits, classifier_forward, estimator_forward, gcn_forward, ClassifierCache,
    EstimatorCache, GraphContext,
};
pub use optim::Adam;
pub use params::{
    AdversaryParams, ClassifierParams, EstimatorParams, ModelDims, ModelParams, ParamGroup,
};
