//! Small deterministic graphs shared by tests, examples and benchmarks.

use ndarray::Array2;
use rand::Rng;

use crate::graph::{Graph, SplitMasks};
use crate::rng::{self, Stream};

/// Eight nodes, four features: a ring with two chords, alternating labels
/// and a sensitive attribute that splits the ring in halves.
pub fn eight_node_graph() -> Graph {
    let edges = [
        (0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (7, 0), (0, 4), (2, 6),
    ];
    let mut rng = rng::stream(8, Stream::Synthetic);
    let features = Array2::from_shape_simple_fn((8, 4), || rng.random_range(-1.0..1.0));
    Graph::new(
        (0..8).map(|i| format!("n{i}")).collect(),
        &edges,
        features,
        [1, 0, 1, 1, 0, 0, 1, 0].map(Some).to_vec(),
        [0, 0, 0, 0, 1, 1, 1, 1].map(Some).to_vec(),
    )
    .expect("fixture is valid")
}

/// Masks for [`eight_node_graph`]: six training nodes, two test nodes.
pub fn eight_node_masks() -> SplitMasks {
    SplitMasks {
        train_ids: vec![0, 1, 2, 4, 5, 6],
        val_ids: vec![],
        test_ids: vec![3, 7],
        sensitive_known_ids: vec![0, 1, 4, 5, 7],
        forget_ids: vec![2, 5],
    }
}
