use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::Hypergraph;
use crate::tensor::SparseMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `Dv^-1/2 H De^-1 H^T Dv^-1/2`
    Symmetric,
    /// `H De^-1 H^T` with every nonzero row scaled to sum 1.
    RowStochastic,
}

/// Node-by-node smoothing operator derived from a hypergraph.
#[derive(Debug, Clone)]
pub struct PropagationOperator {
    pub matrix: Arc<SparseMatrix>,
    pub normalization: Normalization,
    pub self_loop_alpha: f64,
}

/// Builds `(1 - alpha) * M + alpha * I` for the chosen normalisation of
/// `M`. Nodes of degree zero get zero rows and columns in `M`.
///
/// In symmetric mode entry `(u, v)` is `inv_sqrt(d_u) * inv_sqrt(d_v)` times
/// the sum of `1/|e|` over shared hyperedges. The sum runs over the same
/// ascending edge list for `(u, v)` and `(v, u)`, so the stored matrix equals
/// its transpose bit for bit.
pub fn propagation_operator(
    hg: &Hypergraph,
    normalization: Normalization,
    self_loop_alpha: f64,
) -> PropagationOperator {
    let n = hg.num_nodes();
    let sizes = hg.edge_sizes();
    let degrees = hg.node_degrees();
    let inv_sqrt: Vec<f64> =
        degrees.iter().map(|&d| if d == 0 { 0.0 } else { 1.0 / (d as f64).sqrt() }).collect();

    let mut triplets = Vec::new();
    let mut row: BTreeMap<usize, f64> = BTreeMap::new();
    for u in 0..n {
        row.clear();
        for &e in hg.incident_edges(u) {
            let w = 1.0 / sizes[e] as f64;
            for &v in hg.edge(e) {
                *row.entry(v).or_insert(0.0) += w;
            }
        }
        let row_total: f64 = row.values().sum();
        let has_self = row.contains_key(&u);
        for (&v, &s) in &row {
            let m = match normalization {
                Normalization::Symmetric => s * (inv_sqrt[u] * inv_sqrt[v]),
                Normalization::RowStochastic => s / row_total,
            };
            let mut value = (1.0 - self_loop_alpha) * m;
            if v == u {
                value += self_loop_alpha;
            }
            triplets.push((u, v, value));
        }
        if !has_self && self_loop_alpha != 0.0 {
            triplets.push((u, u, self_loop_alpha));
        }
    }
    let matrix = SparseMatrix::from_triplets(n, n, triplets).expect("indices in range");
    PropagationOperator { matrix: Arc::new(matrix), normalization, self_loop_alpha }
}
