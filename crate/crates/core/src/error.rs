use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised while building or transforming graphs and splits.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("feature matrix has {found} rows but the graph has {expected} nodes")]
    FeatureRows { expected: usize, found: usize },
    #[error("{field} vector has length {found}, expected {expected}")]
    AttributeLength {
        field: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{field} of node {node} is {value}, expected 0 or 1")]
    NotBinary {
        field: &'static str,
        node: usize,
        value: u8,
    },
    #[error("edge ({0}, {1}) references a node index outside the graph")]
    EdgeOutOfRange(usize, usize),
    #[error("duplicate node id `{0}`")]
    DuplicateNodeId(String),
    #[error("unknown node id `{0}`")]
    UnknownNodeId(String),
    #[error("node index {0} is out of range")]
    UnknownNodeIndex(usize),
    #[error("{name} = {value} is outside the valid range {range}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("split produced an empty {0} set")]
    EmptySplit(&'static str),
    #[error("split masks are inconsistent: {0}")]
    InvalidMasks(String),
}

/// Errors raised by the numeric engine.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    Shape {
        context: &'static str,
        expected: String,
        found: String,
    },
    #[error("forward cache is stale for the {0} parameters")]
    StaleCache(&'static str),
    #[error("non-finite gradient originating from the {0} term")]
    NonFiniteGradient(&'static str),
    #[error("node {0} has no label")]
    Unlabeled(usize),
    #[error("node index {0} is out of range")]
    NodeOutOfRange(usize),
}

/// Errors raised by the scalar training losses.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum LossError {
    #[error("{0} node set is empty")]
    EmptyNodeSet(&'static str),
    #[error("input lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("covariance needs at least two entries, found {0}")]
    TooShort(usize),
    #[error("adversary loss needs both estimated groups, group {0} is empty")]
    EmptyGroup(u8),
}

/// Errors raised by fairness and privacy metrics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("{metric} is undefined: {reason}")]
    Undefined {
        metric: &'static str,
        reason: String,
    },
    #[error("input lengths differ ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("{0} is empty")]
    Empty(&'static str),
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error("training diverged at epoch {epoch}: {term} became non-finite")]
    Divergence { epoch: usize, term: &'static str },
    #[error("{0}")]
    Training(String),
    #[error("{0}")]
    Unlearning(String),
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unsupported format: {0}")]
    Format(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
