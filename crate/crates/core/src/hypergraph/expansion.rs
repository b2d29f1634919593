use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::Hypergraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CliqueWeighting {
    /// 1 per co-occurrence.
    Unit,
    /// 1/|e| per co-occurrence in hyperedge e.
    InverseSize,
}

/// Symmetric weighted graph. Each undirected edge is stored in both
/// directions, sorted by `(u, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    pub num_nodes: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl WeightedGraph {
    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        self.edges.binary_search_by(|&(a, b, _)| (a, b).cmp(&(u, v))).ok().map(|k| self.edges[k].2)
    }

    /// Undirected pairs `u < v`.
    pub fn undirected(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.edges.iter().copied().filter(|&(u, v, _)| u < v)
    }
}

/// Connects every pair of nodes that share a hyperedge. Weights of pairs
/// covered by several hyperedges add up; singletons contribute nothing.
pub fn clique_expansion(hg: &Hypergraph, weighting: CliqueWeighting) -> WeightedGraph {
    let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for members in hg.edges() {
        if members.len() < 2 {
            continue;
        }
        let w = match weighting {
            CliqueWeighting::Unit => 1.0,
            CliqueWeighting::InverseSize => 1.0 / members.len() as f64,
        };
        for (i, &u) in members.iter().enumerate() {
            for &v in &members[i + 1..] {
                *acc.entry((u, v)).or_insert(0.0) += w;
            }
        }
    }
    let mut edges: Vec<(usize, usize, f64)> =
        acc.into_iter().flat_map(|((u, v), w)| [(u, v, w), (v, u, w)]).collect();
    edges.sort_by_key(|&(u, v, _)| (u, v));
    WeightedGraph { num_nodes: hg.num_nodes(), edges }
}
