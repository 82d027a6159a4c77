//! Biased synthetic graphs used as the standard test fixture.
//!
//! Each node has a sensitive bit `s` (exactly half the nodes have `s = 1`)
//! and a latent merit `z ~ N(0, 1)`. The label is
//! `y = 1[z + bias_strength * (2s - 1) + noise > 0]`, so `bias_strength = 0`
//! makes `y` independent of `s`. Feature 0 is a noisy copy of the merit,
//! feature 1 is weakly shifted by `s`, the remaining features are noise.
//! A `homophily` share of edges connects nodes of the same group.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::GraphError;
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub nodes: usize,
    pub features: usize,
    pub homophily: f64,
    pub bias_strength: f64,
    pub avg_degree: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            nodes: 2000,
            features: 8,
            homophily: 0.8,
            bias_strength: 0.8,
            avg_degree: 8.0,
        }
    }
}

impl SyntheticSpec {
    pub fn generate(&self, seed: u64) -> Result<Graph, GraphError> {
        if self.nodes < 10 {
            return Err(GraphError::InvalidParameter {
                name: "nodes",
                value: self.nodes as f64,
                range: ">= 10",
            });
        }
        if self.features < 2 {
            return Err(GraphError::InvalidParameter {
                name: "features",
                value: self.features as f64,
                range: ">= 2",
            });
        }
        for (name, value) in [
            ("homophily", self.homophily),
            ("bias_strength", self.bias_strength),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(GraphError::InvalidParameter {
                    name,
                    value,
                    range: "[0, 1]",
                });
            }
        }
        if !(self.avg_degree >= 0.0) {
            return Err(GraphError::InvalidParameter {
                name: "avg_degree",
                value: self.avg_degree,
                range: ">= 0",
            });
        }

        let n = self.nodes;
        let mut rng = rng::stream(seed, Stream::Synthetic);
        let normal = |rng: &mut rand_chacha::ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };

        let mut sensitive: Vec<u8> = (0..n).map(|i| u8::from(i < n / 2)).collect();
        sensitive.shuffle(&mut rng);

        let merit: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
        let labels: Vec<Option<u8>> = (0..n)
            .map(|i| {
                let shift = self.bias_strength * (2.0 * f64::from(sensitive[i]) - 1.0);
                let score = merit[i] + shift + 0.3 * normal(&mut rng);
                Some(u8::from(score > 0.0))
            })
            .collect();

        let mut features = Array2::<f64>::zeros((n, self.features));
        for i in 0..n {
            features[[i, 0]] = merit[i] + 0.5 * normal(&mut rng);
            features[[i, 1]] = 0.5 * (2.0 * f64::from(sensitive[i]) - 1.0) + normal(&mut rng);
            for j in 2..self.features {
                features[[i, j]] = normal(&mut rng);
            }
        }

        let groups: [Vec<usize>; 2] = [
            (0..n).filter(|&i| sensitive[i] == 0).collect(),
            (0..n).filter(|&i| sensitive[i] == 1).collect(),
        ];
        let target_edges = (self.avg_degree * n as f64 / 2.0).round() as usize;
        let mut edges = Vec::with_capacity(target_edges);
        let mut attempts = 0;
        while edges.len() < target_edges && attempts < 20 * target_edges + 100 {
            attempts += 1;
            let u = rng.random_range(0..n);
            let same = rng.random::<f64>() < self.homophily;
            let group = if same { sensitive[u] } else { 1 - sensitive[u] };
            let pool = &groups[usize::from(group)];
            if pool.is_empty() {
                continue;
            }
            let v = pool[rng.random_range(0..pool.len())];
            if u != v {
                edges.push((u.min(v), u.max(v)));
            }
        }

        Graph::new(
            (0..n).map(|i| i.to_string()).collect(),
            &edges,
            features,
            labels,
            sensitive.into_iter().map(Some).collect(),
        )
    }
}

/// Synthetic biased graph with the default average degree of 8.
pub fn generate_synthetic_biased_graph(
    seed: u64,
    n: usize,
    d: usize,
    homophily: f64,
    bias_strength: f64,
) -> Result<Graph, GraphError> {
    SyntheticSpec {
        nodes: n,
        features: d,
        homophily,
        bias_strength,
        ..SyntheticSpec::default()
    }
    .generate(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn positive_rate_gap(g: &Graph) -> f64 {
        let mut pos = [0.0; 2];
        let mut cnt = [0.0; 2];
        for v in 0..g.num_nodes() {
            let s = g.sensitive()[v].unwrap() as usize;
            cnt[s] += 1.0;
            pos[s] += f64::from(g.label(v).unwrap());
        }
        (pos[0] / cnt[0] - pos[1] / cnt[1]).abs()
    }

    #[test]
    fn unbiased_labels_are_independent_of_group() {
        let g = generate_synthetic_biased_graph(5, 20_000, 4, 0.7, 0.0).unwrap();
        assert!(positive_rate_gap(&g) < 0.05);
    }

    #[test]
    fn bias_creates_a_gap() {
        let g = generate_synthetic_biased_graph(5, 4000, 4, 0.7, 0.8).unwrap();
        assert!(positive_rate_gap(&g) > 0.3);
    }

    #[test]
    fn groups_are_balanced_and_homophilous() {
        let g = generate_synthetic_biased_graph(1, 1000, 3, 0.9, 0.5).unwrap();
        let ones = g.sensitive().iter().filter(|s| **s == Some(1)).count();
        assert_eq!(ones, 500);
        let s = |v: usize| g.sensitive()[v];
        let (same, total) = g
            .edges()
            .fold((0usize, 0usize), |(a, t), (u, v)| (a + usize::from(s(u) == s(v)), t + 1));
        assert!(total > 3000);
        assert!(same as f64 / total as f64 > 0.85);
    }

    #[test]
    fn deterministic() {
        let a = generate_synthetic_biased_graph(42, 200, 5, 0.8, 0.8).unwrap();
        let b = generate_synthetic_biased_graph(42, 200, 5, 0.8, 0.8).unwrap();
        let c = generate_synthetic_biased_graph(43, 200, 5, 0.8, 0.8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn preconditions() {
        assert!(generate_synthetic_biased_graph(0, 9, 4, 0.5, 0.5).is_err());
        assert!(generate_synthetic_biased_graph(0, 10, 1, 0.5, 0.5).is_err());
        assert!(generate_synthetic_biased_graph(0, 10, 2, 1.5, 0.5).is_err());
    }
}
