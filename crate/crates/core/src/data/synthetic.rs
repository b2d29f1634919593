//! Small generated node-level datasets for tests, examples and smoke runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::hypergraph::Hypergraph;
use crate::models::TaskKind;
use crate::tensor::Tensor;

/// Class-structured random hypergraph with Gaussian class-centroid features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlantedConfig {
    pub nodes: usize,
    pub classes: usize,
    pub edges: usize,
    pub min_size: usize,
    pub max_size: usize,
    /// Probability that a member is drawn from the hyperedge's own class.
    pub homophily: f64,
    pub features: usize,
    /// Distance of class centroids from the origin relative to unit noise.
    pub signal: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig {
            nodes: 300,
            classes: 3,
            edges: 240,
            min_size: 2,
            max_size: 5,
            homophily: 0.85,
            features: 16,
            signal: 0.6,
            seed: 0,
        }
    }
}

pub fn planted_partition(cfg: &PlantedConfig) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let labels: Vec<usize> = (0..cfg.nodes).map(|v| v % cfg.classes).collect();
    let members: Vec<Vec<usize>> =
        (0..cfg.classes).map(|c| (0..cfg.nodes).filter(|&v| labels[v] == c).collect()).collect();
    let centroids: Vec<Vec<f64>> = (0..cfg.classes)
        .map(|_| {
            (0..cfg.features).map(|_| if rng.random_bool(0.5) { cfg.signal } else { -cfg.signal }).collect()
        })
        .collect();
    let mut edges = Vec::with_capacity(cfg.edges);
    for _ in 0..cfg.edges {
        let c = rng.random_range(0..cfg.classes);
        let k = rng.random_range(cfg.min_size..=cfg.max_size);
        let mut e = Vec::with_capacity(k);
        while e.len() < k {
            let v = if rng.random_bool(cfg.homophily) {
                members[c][rng.random_range(0..members[c].len())]
            } else {
                rng.random_range(0..cfg.nodes)
            };
            if !e.contains(&v) {
                e.push(v);
            }
        }
        edges.push(e);
    }
    let mut data = Vec::with_capacity(cfg.nodes * cfg.features);
    for &y in &labels {
        for &c in &centroids[y] {
            let noise: f64 = StandardNormal.sample(&mut rng);
            data.push(c + noise);
        }
    }
    Dataset {
        name: "planted".into(),
        level: TaskKind::Node,
        hypergraphs: vec![Hypergraph::new(&edges, cfg.nodes).expect("valid edges")],
        features: vec![Tensor::from_vec(cfg.nodes, cfg.features, data).expect("shape")],
        labels,
        num_classes: cfg.classes,
        sensitive: None,
    }
}

/// Eight nodes in two four-node cliques, one per class, with features that
/// separate the classes linearly.
pub fn two_cliques() -> Dataset {
    let hg = Hypergraph::new(&[vec![0, 1, 2, 3], vec![4, 5, 6, 7]], 8).expect("valid edges");
    let rows: Vec<Vec<f64>> = (0..8)
        .map(|v| {
            let wobble = 0.1 * (v % 4) as f64;
            if v < 4 {
                vec![1.0 + wobble, -wobble]
            } else {
                vec![-wobble, 1.0 + wobble]
            }
        })
        .collect();
    Dataset {
        name: "two_cliques".into(),
        level: TaskKind::Node,
        hypergraphs: vec![hg],
        features: vec![Tensor::from_rows(&rows)],
        labels: (0..8).map(|v| usize::from(v >= 4)).collect(),
        num_classes: 2,
        sensitive: None,
    }
}
