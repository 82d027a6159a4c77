//! Attributed graphs, node deletion, splits and dataset ingestion.

mod adjacency;
pub mod io;
mod split;
mod synthetic;

use std::collections::{BTreeSet, HashMap};

use ndarray::{Array2, Axis};

use crate::error::GraphError;

pub use adjacency::{build_normalized_adjacency, NormalizedAdjacency, SparseMatrix};
pub use split::{split_dataset, SplitMasks, SplitSpec};
pub use synthetic::{generate_synthetic_biased_graph, SyntheticSpec};

/// An undirected attributed graph with binary labels and sensitive attributes.
///
/// Nodes are addressed by dense indices `0..n`; each node also carries a
/// stable external id that survives [`Graph::delete_nodes`].
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    node_ids: Vec<String>,
    id_index: HashMap<String, usize>,
    neighbors: Vec<Vec<usize>>,
    num_edges: usize,
    features: Array2<f64>,
    labels: Vec<Option<u8>>,
    sensitive: Vec<Option<u8>>,
}

impl Graph {
    /// Builds a graph. Duplicate edges and self-loops are dropped.
    pub fn new(
        node_ids: Vec<String>,
        edges: &[(usize, usize)],
        features: Array2<f64>,
        labels: Vec<Option<u8>>,
        sensitive: Vec<Option<u8>>,
    ) -> Result<Self, GraphError> {
        let n = node_ids.len();
        if features.nrows() != n {
            return Err(GraphError::FeatureRows {
                expected: n,
                found: features.nrows(),
            });
        }
        Graph::check_binary("labels", &labels, n)?;
        Graph::check_binary("sensitive", &sensitive, n)?;

        let mut id_index = HashMap::with_capacity(n);
        for (i, id) in node_ids.iter().enumerate() {
            if id_index.insert(id.clone(), i).is_some() {
                return Err(GraphError::DuplicateNodeId(id.clone()));
            }
        }

        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(GraphError::EdgeOutOfRange(u, v));
            }
            if u != v {
                neighbors[u].push(v);
                neighbors[v].push(u);
            }
        }
        let mut twice_edges = 0;
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
            twice_edges += list.len();
        }

        Ok(Graph {
            node_ids,
            id_index,
            neighbors,
            num_edges: twice_edges / 2,
            features,
            labels,
            sensitive,
        })
    }

    /// Unlabeled graph with ids `"0".."n-1"`; convenient for tests.
    pub fn from_edges(
        n: usize,
        edges: &[(usize, usize)],
        features: Array2<f64>,
    ) -> Result<Self, GraphError> {
        Graph::new(
            (0..n).map(|i| i.to_string()).collect(),
            edges,
            features,
            vec![None; n],
            vec![None; n],
        )
    }

    pub fn with_labels(mut self, labels: Vec<Option<u8>>) -> Result<Self, GraphError> {
        Graph::check_binary("labels", &labels, self.num_nodes())?;
        self.labels = labels;
        Ok(self)
    }

    pub fn with_sensitive(mut self, sensitive: Vec<Option<u8>>) -> Result<Self, GraphError> {
        Graph::check_binary("sensitive", &sensitive, self.num_nodes())?;
        self.sensitive = sensitive;
        Ok(self)
    }

    fn check_binary(field: &'static str, values: &[Option<u8>], n: usize) -> Result<(), GraphError> {
        if values.len() != n {
            return Err(GraphError::AttributeLength {
                field,
                expected: n,
                found: values.len(),
            });
        }
        match values
            .iter()
            .enumerate()
            .find_map(|(i, v)| v.filter(|&v| v > 1).map(|v| (i, v)))
        {
            Some((node, value)) => Err(GraphError::NotBinary { field, node, value }),
            None => Ok(()),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.node_ids.len()
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn num_features(&self) -> usize {
        self.features.ncols()
    }

    /// A graph without nodes is valid but cannot be trained on.
    pub fn is_degenerate(&self) -> bool {
        self.node_ids.is_empty()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors[u].binary_search(&v).is_ok()
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.neighbors
            .iter()
            .enumerate()
            .flat_map(|(u, nbrs)| nbrs.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[Option<u8>] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> Option<u8> {
        self.labels[node]
    }

    pub fn sensitive(&self) -> &[Option<u8>] {
        &self.sensitive
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn node_id(&self, node: usize) -> &str {
        &self.node_ids[node]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.id_index.get(id).copied()
    }

    /// Maps dense indices of `other` onto this graph through external ids,
    /// dropping nodes that do not exist here.
    pub fn translate_from(&self, other: &Graph, nodes: &[usize]) -> Vec<usize> {
        nodes
            .iter()
            .filter_map(|&i| self.index_of(other.node_id(i)))
            .collect()
    }

    /// Removes `forget` (dense indices) with all incident edges. Remaining
    /// nodes are re-indexed in their original order and keep their external
    /// ids. Nodes isolated by the deletion are kept.
    pub fn delete_nodes(&self, forget: &[usize]) -> Result<Graph, GraphError> {
        let n = self.num_nodes();
        let mut removed = vec![false; n];
        for &v in forget {
            if v >= n {
                return Err(GraphError::UnknownNodeIndex(v));
            }
            removed[v] = true;
        }
        let mut remap = vec![usize::MAX; n];
        let kept: Vec<usize> = (0..n).filter(|&i| !removed[i]).collect();
        for (new, &old) in kept.iter().enumerate() {
            remap[old] = new;
        }

        let neighbors: Vec<Vec<usize>> = kept
            .iter()
            .map(|&old| {
                self.neighbors[old]
                    .iter()
                    .filter(|&&j| !removed[j])
                    .map(|&j| remap[j])
                    .collect()
            })
            .collect();
        let num_edges = neighbors.iter().map(Vec::len).sum::<usize>() / 2;
        let node_ids: Vec<String> = kept.iter().map(|&i| self.node_ids[i].clone()).collect();
        let id_index = node_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i))
            .collect();

        Ok(Graph {
            node_ids,
            id_index,
            neighbors,
            num_edges,
            features: self.features.select(Axis(0), &kept),
            labels: kept.iter().map(|&i| self.labels[i]).collect(),
            sensitive: kept.iter().map(|&i| self.sensitive[i]).collect(),
        })
    }

    /// Same as [`Graph::delete_nodes`] but addressed by external id.
    pub fn delete_by_id<S: AsRef<str>>(&self, ids: &[S]) -> Result<Graph, GraphError> {
        let mut idx = BTreeSet::new();
        for id in ids {
            let id = id.as_ref();
            idx.insert(
                self.index_of(id)
                    .ok_or_else(|| GraphError::UnknownNodeId(id.to_string()))?,
            );
        }
        self.delete_nodes(&idx.into_iter().collect::<Vec<_>>())
    }
}
