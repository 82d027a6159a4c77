use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};

use super::loss::{clamp_prob, sigmoid};
use super::params::{AdversaryParams, ClassifierParams, EstimatorParams, ParamGroup};
use crate::error::NnError;
use crate::graph::{build_normalized_adjacency, Graph, NormalizedAdjacency};

/// A graph together with its propagation operator and the pre-propagated
/// features `ÂX`, which every first GCN layer consumes.
#[derive(Debug, Clone)]
pub struct GraphContext {
    graph: Graph,
    adj: NormalizedAdjacency,
    ax: Array2<f64>,
}

impl GraphContext {
    pub fn new(graph: Graph) -> Self {
        let adj = build_normalized_adjacency(&graph);
        let ax = adj.propagate(graph.features().view());
        GraphContext { graph, adj, ax }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn adj(&self) -> &NormalizedAdjacency {
        &self.adj
    }

    /// `Â · X`.
    pub fn propagated_features(&self) -> &Array2<f64> {
        &self.ax
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn into_graph(self) -> Graph {
        self.graph
    }
}

/// Intermediate values of a classifier forward pass over all nodes.
#[derive(Debug, Clone)]
pub struct ClassifierCache {
    pub(crate) fingerprint: u64,
    pub z1: Array2<f64>,
    pub h1: Array2<f64>,
    /// `Â · H1`
    pub ah1: Array2<f64>,
    pub z2: Array2<f64>,
    /// Node representations `h_v` (rows).
    pub h: Array2<f64>,
    pub logits: Array1<f64>,
    /// Clamped predicted probabilities `ŷ_v`.
    pub probs: Array1<f64>,
}

impl ClassifierCache {
    pub fn representations(&self) -> &Array2<f64> {
        &self.h
    }

    pub fn is_fresh_for(&self, params: &ClassifierParams) -> bool {
        self.fingerprint == params.fingerprint()
    }
}

#[derive(Debug, Clone)]
pub struct EstimatorCache {
    pub(crate) fingerprint: u64,
    pub z: Array2<f64>,
    pub h: Array2<f64>,
    pub logits: Array1<f64>,
    pub probs: Array1<f64>,
}

fn relu(z: &Array2<f64>) -> Array2<f64> {
    z.mapv(|v| v.max(0.0))
}

fn add_bias(mut m: Array2<f64>, b: &Array1<f64>) -> Array2<f64> {
    m += &b.view().insert_axis(Axis(0));
    m
}

fn probabilities(logits: &Array1<f64>) -> Array1<f64> {
    logits.mapv(|z| clamp_prob(sigmoid(z)))
}

fn check_input(context: &'static str, ax: &Array2<f64>, expected_cols: usize) -> Result<(), NnError> {
    if ax.ncols() != expected_cols {
        return Err(NnError::Shape {
            context,
            expected: format!("{expected_cols} feature columns"),
            found: format!("{} feature columns", ax.ncols()),
        });
    }
    Ok(())
}

pub(crate) fn classifier_forward_propagated(
    params: &ClassifierParams,
    adj: &NormalizedAdjacency,
    ax: &Array2<f64>,
) -> Result<ClassifierCache, NnError> {
    params.check_shapes()?;
    check_input("classifier input", ax, params.w1.nrows())?;
    if ax.nrows() != adj.num_nodes() {
        return Err(NnError::Shape {
            context: "classifier input",
            expected: format!("{} rows", adj.num_nodes()),
            found: format!("{} rows", ax.nrows()),
        });
    }
    let z1 = add_bias(ax.dot(&params.w1), &params.b1);
    let h1 = relu(&z1);
    let ah1 = adj.propagate(h1.view());
    let z2 = add_bias(ah1.dot(&params.w2), &params.b2);
    let h = relu(&z2);
    let logits = h.dot(&params.head);
    let probs = probabilities(&logits);
    Ok(ClassifierCache {
        fingerprint: params.fingerprint(),
        z1,
        h1,
        ah1,
        z2,
        h,
        logits,
        probs,
    })
}

/// Two-layer GCN forward pass:
/// `h = relu(Â relu(Â X W1 + b1) W2 + b2)`, `ŷ = sigmoid(h · w)`.
pub fn gcn_forward(
    params: &ClassifierParams,
    adj: &NormalizedAdjacency,
    features: ArrayView2<'_, f64>,
) -> Result<ClassifierCache, NnError> {
    if features.nrows() != adj.num_nodes() {
        return Err(NnError::Shape {
            context: "feature matrix",
            expected: format!("{} rows", adj.num_nodes()),
            found: format!("{} rows", features.nrows()),
        });
    }
    let ax = adj.propagate(features);
    classifier_forward_propagated(params, adj, &ax)
}

pub fn classifier_forward(params: &ClassifierParams, ctx: &GraphContext) -> Result<ClassifierCache, NnError> {
    classifier_forward_propagated(params, ctx.adj(), ctx.propagated_features())
}

/// One GCN layer followed by a sigmoid head.
pub fn estimator_forward(params: &EstimatorParams, ctx: &GraphContext) -> Result<EstimatorCache, NnError> {
    let ax = ctx.propagated_features();
    check_input("estimator input", ax, params.w.nrows())?;
    let h_dim = params.w.ncols();
    if params.b.len() != h_dim || params.head.len() != h_dim {
        return Err(NnError::Shape {
            context: "estimator parameters",
            expected: format!("bias and head of length {h_dim}"),
            found: format!("{} and {}", params.b.len(), params.head.len()),
        });
    }
    let z = add_bias(ax.dot(&params.w), &params.b);
    let h = relu(&z);
    let logits = h.dot(&params.head) + params.head_bias;
    let probs = probabilities(&logits);
    Ok(EstimatorCache {
        fingerprint: params.fingerprint(),
        z,
        h,
        logits,
        probs,
    })
}

/// Adversary logits `h_v · a + c` for the given rows of `h`.
pub fn adversary_logits(params: &AdversaryParams, h: &Array2<f64>, nodes: &[usize]) -> Result<Vec<f64>, NnError> {
    if h.ncols() != params.weight.len() {
        return Err(NnError::Shape {
            context: "adversary input",
            expected: format!("{} columns", params.weight.len()),
            found: format!("{} columns", h.ncols()),
        });
    }
    Ok(nodes
        .iter()
        .map(|&v| h.row(v).dot(&params.weight) + params.bias)
        .collect())
}

pub(crate) fn relu_mask_mul(grad: &mut Array2<f64>, pre: &Array2<f64>) {
    Zip::from(grad).and(pre).for_each(|g, &z| {
        if z <= 0.0 {
            *g = 0.0;
        }
    });
}
