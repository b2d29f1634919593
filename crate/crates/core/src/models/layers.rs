//! Hypergraph layers as functions over a [`Tape`].
//!
//! Structure enters every layer as constant sparse operators built once per
//! hypergraph. Parameters are passed in as tape handles so the same code
//! serves training, evaluation and gradient checks.

use std::sync::Arc;

use super::config::Activation;
use super::ModelError;
use crate::hypergraph::{Hypergraph, WeightedGraph};
use crate::tensor::{SparseMatrix, Tape, Var};

const LEAKY_SLOPE: f64 = 0.01;

/// `x · weight + bias`.
#[derive(Debug, Clone, Copy)]
pub struct Linear {
    pub weight: Var,
    pub bias: Option<Var>,
}

impl Linear {
    pub fn apply(&self, tape: &mut Tape, x: Var) -> Result<Var, ModelError> {
        let y = tape.matmul(x, self.weight)?;
        Ok(match self.bias {
            Some(b) => tape.add_row(y, b)?,
            None => y,
        })
    }
}

pub fn activate(tape: &mut Tape, x: Var, act: Activation) -> Var {
    match act {
        Activation::Relu => tape.relu(x),
        Activation::LeakyRelu => tape.leaky_relu(x, LEAKY_SLOPE),
        Activation::Sigmoid => tape.sigmoid(x),
        Activation::Linear => x,
    }
}

/// `op · x · theta`, choosing the cheaper association. Both orders are
/// mathematically identical; the narrower side goes through the sparse product.
fn propagate_then_transform(
    tape: &mut Tape,
    op: &Arc<SparseMatrix>,
    x: Var,
    theta: Var,
) -> Result<Var, ModelError> {
    let (fan_in, fan_out) = tape.shape(theta);
    if fan_out < fan_in {
        let xt = tape.matmul(x, theta)?;
        Ok(tape.spmm(op, xt)?)
    } else {
        let px = tape.spmm(op, x)?;
        Ok(tape.matmul(px, theta)?)
    }
}

fn check_square(op: &SparseMatrix, x_rows: usize) -> Result<(), ModelError> {
    if op.rows() != op.cols() || op.cols() != x_rows {
        return Err(ModelError::Structure(format!(
            "operator {:?} does not act on {x_rows} nodes",
            op.shape()
        )));
    }
    Ok(())
}

/// Spectral hypergraph convolution `act(P X Θ + b)` with `P` the symmetric
/// propagation operator.
pub fn hgnn_layer(
    tape: &mut Tape,
    x: Var,
    p: &Arc<SparseMatrix>,
    theta: Var,
    bias: Option<Var>,
    act: Activation,
) -> Result<Var, ModelError> {
    check_square(p, tape.shape(x).0)?;
    let mut y = propagate_then_transform(tape, p, x, theta)?;
    if let Some(b) = bias {
        y = tape.add_row(y, b)?;
    }
    Ok(activate(tape, y, act))
}

/// `D̃^-1/2 (A + I) D̃^-1/2` for a weighted graph.
pub fn gcn_operator(graph: &WeightedGraph) -> SparseMatrix {
    let n = graph.num_nodes;
    let mut deg = vec![1.0; n];
    for &(u, _, w) in &graph.edges {
        deg[u] += w;
    }
    let inv: Vec<f64> = deg.iter().map(|d| 1.0 / f64::sqrt(*d)).collect();
    let mut triplets: Vec<(usize, usize, f64)> =
        graph.edges.iter().map(|&(u, v, w)| (u, v, w * (inv[u] * inv[v]))).collect();
    triplets.extend((0..n).map(|v| (v, v, inv[v] * inv[v])));
    SparseMatrix::from_triplets(n, n, triplets).expect("indices in range")
}

/// Graph convolution over the clique expansion: `act(Ĝ X Θ + b)`.
pub fn hypergcn_layer(
    tape: &mut Tape,
    x: Var,
    g_hat: &Arc<SparseMatrix>,
    theta: Var,
    bias: Option<Var>,
    act: Activation,
) -> Result<Var, ModelError> {
    hgnn_layer(tape, x, g_hat, theta, bias, act)
}

/// Weighted node→edge and edge→node aggregation matrices for HNHN.
#[derive(Debug, Clone)]
pub struct HnhnOperators {
    /// `|E| × |V|`; row `e` weights member `u` by `d_u^α / Σ_{w∈e} d_w^α`.
    pub node_to_edge: Arc<SparseMatrix>,
    /// `|V| × |E|`; row `v` weights edge `e` by `|e|^β / Σ_{f∋v} |f|^β`.
    pub edge_to_node: Arc<SparseMatrix>,
}

impl HnhnOperators {
    pub fn new(hg: &Hypergraph, alpha: f64, beta: f64) -> Self {
        let deg = hg.node_degrees();
        let size = hg.edge_sizes();
        let mut v2e = Vec::with_capacity(hg.nnz());
        for e in 0..hg.num_edges() {
            let members = hg.edge(e);
            let w: Vec<f64> = members.iter().map(|&u| (deg[u] as f64).powf(alpha)).collect();
            for (&u, k) in members.iter().zip(normalized(&w)) {
                v2e.push((e, u, k));
            }
        }
        let mut e2v = Vec::with_capacity(hg.nnz());
        for v in 0..hg.num_nodes() {
            let edges = hg.incident_edges(v);
            let w: Vec<f64> = edges.iter().map(|&e| (size[e] as f64).powf(beta)).collect();
            for (&e, k) in edges.iter().zip(normalized(&w)) {
                e2v.push((v, e, k));
            }
        }
        HnhnOperators {
            node_to_edge: Arc::new(
                SparseMatrix::from_triplets(hg.num_edges(), hg.num_nodes(), v2e).expect("in range"),
            ),
            edge_to_node: Arc::new(
                SparseMatrix::from_triplets(hg.num_nodes(), hg.num_edges(), e2v).expect("in range"),
            ),
        }
    }
}

/// Weights divided by their sum; uniform if the sum is zero or not finite.
fn normalized(w: &[f64]) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    if total > 0.0 && total.is_finite() && w.iter().all(|x| x.is_finite()) {
        w.iter().map(|x| x / total).collect()
    } else {
        vec![1.0 / w.len() as f64; w.len()]
    }
}

/// Two-stage HNHN layer: hyperedge embeddings first, then nodes.
pub fn hnhn_layer(
    tape: &mut Tape,
    x: Var,
    ops: &HnhnOperators,
    edge: &Linear,
    node: &Linear,
    act: Activation,
) -> Result<Var, ModelError> {
    let mut e = propagate_then_transform(tape, &ops.node_to_edge, x, edge.weight)?;
    if let Some(b) = edge.bias {
        e = tape.add_row(e, b)?;
    }
    let e = activate(tape, e, act);
    let mut v = propagate_then_transform(tape, &ops.edge_to_node, e, node.weight)?;
    if let Some(b) = node.bias {
        v = tape.add_row(v, b)?;
    }
    Ok(activate(tape, v, act))
}

/// Plain mean aggregation in both directions. Isolated nodes aggregate to
/// zero.
#[derive(Debug, Clone)]
pub struct MeanOperators {
    pub node_to_edge: Arc<SparseMatrix>,
    pub edge_to_node: Arc<SparseMatrix>,
}

impl MeanOperators {
    pub fn new(hg: &Hypergraph) -> Self {
        HnhnOperators::new(hg, 0.0, 0.0).into()
    }
}

impl From<HnhnOperators> for MeanOperators {
    fn from(ops: HnhnOperators) -> Self {
        MeanOperators { node_to_edge: ops.node_to_edge, edge_to_node: ops.edge_to_node }
    }
}

/// UniGCNII aggregation: member mean into each hyperedge, then
/// `Σ_{e∋v} h_e / (√d_v √d̂_e)` with `d̂_e` the mean degree of e's members.
#[derive(Debug, Clone)]
pub struct UniOperators {
    pub node_to_edge: Arc<SparseMatrix>,
    pub edge_to_node: Arc<SparseMatrix>,
}

impl UniOperators {
    pub fn new(hg: &Hypergraph) -> Self {
        let deg = hg.node_degrees();
        let mean = MeanOperators::new(hg);
        // Members of an edge always have degree >= 1 in the same hypergraph;
        // the floor only matters if degrees come from elsewhere.
        let edge_deg: Vec<f64> = (0..hg.num_edges())
            .map(|e| {
                let m = hg.edge(e);
                m.iter().map(|&u| deg[u].max(1) as f64).sum::<f64>() / m.len() as f64
            })
            .collect();
        let mut e2v = Vec::with_capacity(hg.nnz());
        for (v, &d) in deg.iter().enumerate() {
            let dv = (d as f64).sqrt();
            for &e in hg.incident_edges(v) {
                e2v.push((v, e, 1.0 / (dv * edge_deg[e].sqrt())));
            }
        }
        UniOperators {
            node_to_edge: mean.node_to_edge,
            edge_to_node: Arc::new(
                SparseMatrix::from_triplets(hg.num_nodes(), hg.num_edges(), e2v).expect("in range"),
            ),
        }
    }
}

/// `act(((1-α)·prop + α·X0) · ((1-β)·I + β·W))`.
#[allow(clippy::too_many_arguments)]
pub fn unigcnii_layer(
    tape: &mut Tape,
    x_l: Var,
    x_0: Var,
    ops: &UniOperators,
    w: Var,
    alpha: f64,
    beta: f64,
    act: Activation,
) -> Result<Var, ModelError> {
    if tape.shape(x_l) != tape.shape(x_0) {
        return Err(ModelError::Tensor(crate::tensor::TensorError::ShapeMismatch {
            op: "unigcnii residual",
            left: tape.shape(x_l),
            right: tape.shape(x_0),
        }));
    }
    let h_e = tape.spmm(&ops.node_to_edge, x_l)?;
    let prop = tape.spmm(&ops.edge_to_node, h_e)?;
    let a = tape.scale(prop, 1.0 - alpha);
    let b = tape.scale(x_0, alpha);
    let z = tape.add(a, b)?;
    let zw = tape.matmul(z, w)?;
    let keep = tape.scale(z, 1.0 - beta);
    let mix = tape.scale(zw, beta);
    let out = tape.add(keep, mix)?;
    Ok(activate(tape, out, act))
}

/// DeepSets-style AllSet layer: `E = act(edge_mlp(mean_{v∈e} X))`, then
/// `X' = act(node_mlp(mean_{e∋v} E))`.
pub fn allset_layer(
    tape: &mut Tape,
    x: Var,
    ops: &MeanOperators,
    edge_mlp: &Linear,
    node_mlp: &Linear,
    act: Activation,
) -> Result<Var, ModelError> {
    let agg = tape.spmm(&ops.node_to_edge, x)?;
    let e = edge_mlp.apply(tape, agg)?;
    let e = activate(tape, e, act);
    let back = tape.spmm(&ops.edge_to_node, e)?;
    let v = node_mlp.apply(tape, back)?;
    Ok(activate(tape, v, act))
}
