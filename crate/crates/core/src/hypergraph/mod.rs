//! Immutable hypergraphs stored as a sparse boolean incidence matrix.
//!
//! The incidence is kept twice: node-major (edges of each node) and
//! edge-major (members of each edge). Both lists are sorted ascending, which
//! fixes the order of every floating-point reduction built on top of them.

mod expansion;
mod propagation;

use thiserror::Error;

pub use expansion::{clique_expansion, CliqueWeighting, WeightedGraph};
pub use propagation::{propagation_operator, Normalization, PropagationOperator};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HypergraphError {
    #[error("hyperedge {edge} contains node {node} but there are only {num_nodes} nodes")]
    NodeOutOfRange { edge: usize, node: usize, num_nodes: usize },
    #[error("hyperedge {0} is empty")]
    EmptyEdge(usize),
    #[error("permutation is not a bijection on {0} nodes")]
    NotBijection(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hypergraph {
    num_nodes: usize,
    num_edges: usize,
    edge_ptr: Vec<usize>,
    edge_nodes: Vec<usize>,
    node_ptr: Vec<usize>,
    node_edges: Vec<usize>,
    node_degrees: Vec<usize>,
    edge_sizes: Vec<usize>,
}

impl Hypergraph {
    /// Builds from member lists. Repeated ids inside one hyperedge collapse;
    /// repeated hyperedges are all kept.
    pub fn new<E: AsRef<[usize]>>(edges: &[E], num_nodes: usize) -> Result<Self, HypergraphError> {
        let mut edge_ptr = Vec::with_capacity(edges.len() + 1);
        let mut edge_nodes = Vec::new();
        edge_ptr.push(0);
        for (e, members) in edges.iter().enumerate() {
            let members = members.as_ref();
            if members.is_empty() {
                return Err(HypergraphError::EmptyEdge(e));
            }
            if let Some(&node) = members.iter().find(|&&v| v >= num_nodes) {
                return Err(HypergraphError::NodeOutOfRange { edge: e, node, num_nodes });
            }
            let start = edge_nodes.len();
            edge_nodes.extend_from_slice(members);
            let span = &mut edge_nodes[start..];
            span.sort_unstable();
            let mut w = 0;
            for r in 0..span.len() {
                if r == 0 || span[r] != span[w - 1] {
                    span[w] = span[r];
                    w += 1;
                }
            }
            edge_nodes.truncate(start + w);
            edge_ptr.push(edge_nodes.len());
        }
        Ok(Self::from_edge_major(num_nodes, edge_ptr, edge_nodes))
    }

    fn from_edge_major(num_nodes: usize, edge_ptr: Vec<usize>, edge_nodes: Vec<usize>) -> Self {
        let num_edges = edge_ptr.len() - 1;
        let edge_sizes: Vec<usize> = edge_ptr.windows(2).map(|w| w[1] - w[0]).collect();
        let mut node_degrees = vec![0usize; num_nodes];
        for &v in &edge_nodes {
            node_degrees[v] += 1;
        }
        let mut node_ptr = vec![0usize; num_nodes + 1];
        for v in 0..num_nodes {
            node_ptr[v + 1] = node_ptr[v] + node_degrees[v];
        }
        let mut fill = node_ptr.clone();
        let mut node_edges = vec![0usize; edge_nodes.len()];
        for e in 0..num_edges {
            for &v in &edge_nodes[edge_ptr[e]..edge_ptr[e + 1]] {
                node_edges[fill[v]] = e;
                fill[v] += 1;
            }
        }
        Hypergraph {
            num_nodes,
            num_edges,
            edge_ptr,
            edge_nodes,
            node_ptr,
            node_edges,
            node_degrees,
            edge_sizes,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    /// Number of incident (node, hyperedge) pairs.
    pub fn nnz(&self) -> usize {
        self.edge_nodes.len()
    }

    pub fn node_degrees(&self) -> &[usize] {
        &self.node_degrees
    }

    pub fn edge_sizes(&self) -> &[usize] {
        &self.edge_sizes
    }

    /// Members of hyperedge `e`, ascending.
    pub fn edge(&self, e: usize) -> &[usize] {
        &self.edge_nodes[self.edge_ptr[e]..self.edge_ptr[e + 1]]
    }

    /// Hyperedges containing node `v`, ascending.
    pub fn incident_edges(&self, v: usize) -> &[usize] {
        &self.node_edges[self.node_ptr[v]..self.node_ptr[v + 1]]
    }

    pub fn edges(&self) -> impl Iterator<Item = &[usize]> + '_ {
        (0..self.num_edges).map(move |e| self.edge(e))
    }

    pub fn edge_lists(&self) -> Vec<Vec<usize>> {
        self.edges().map(<[usize]>::to_vec).collect()
    }

    pub fn contains(&self, v: usize, e: usize) -> bool {
        self.edge(e).binary_search(&v).is_ok()
    }

    /// Bipartite view with nodes on one side and hyperedges on the other.
    pub fn star_expansion(&self) -> StarView<'_> {
        StarView { hg: self }
    }

    /// Relabels node `v` as `perm[v]`; hyperedge ids are unchanged.
    pub fn permute_nodes(&self, perm: &[usize]) -> Result<Hypergraph, HypergraphError> {
        let n = self.num_nodes;
        let mut seen = vec![false; n];
        if perm.len() != n {
            return Err(HypergraphError::NotBijection(n));
        }
        for &p in perm {
            if p >= n || seen[p] {
                return Err(HypergraphError::NotBijection(n));
            }
            seen[p] = true;
        }
        let edges: Vec<Vec<usize>> = self.edges().map(|e| e.iter().map(|&v| perm[v]).collect()).collect();
        Hypergraph::new(&edges, n)
    }

    /// Places `parts` side by side without connecting them. Node `v` of part
    /// `k` becomes `offsets[k] + v`.
    pub fn disjoint_union(parts: &[&Hypergraph]) -> (Hypergraph, Vec<usize>) {
        let mut offsets = Vec::with_capacity(parts.len());
        let mut edge_ptr = vec![0];
        let mut edge_nodes = Vec::new();
        let mut base = 0;
        for hg in parts {
            offsets.push(base);
            for e in hg.edges() {
                edge_nodes.extend(e.iter().map(|&v| v + base));
                edge_ptr.push(edge_nodes.len());
            }
            base += hg.num_nodes;
        }
        (Self::from_edge_major(base, edge_ptr, edge_nodes), offsets)
    }

    /// Checks the structural invariants; used by tests and after perturbation.
    pub fn audit(&self) -> Result<(), String> {
        let mut pairs_em = Vec::new();
        for e in 0..self.num_edges {
            let m = self.edge(e);
            if m.is_empty() {
                return Err(format!("edge {e} empty"));
            }
            if m.windows(2).any(|w| w[0] >= w[1]) {
                return Err(format!("edge {e} not strictly ascending"));
            }
            if m.iter().any(|&v| v >= self.num_nodes) {
                return Err(format!("edge {e} has out-of-range node"));
            }
            if self.edge_sizes[e] != m.len() {
                return Err(format!("edge {e} size mismatch"));
            }
            pairs_em.extend(m.iter().map(|&v| (v, e)));
        }
        let mut pairs_nm = Vec::new();
        for v in 0..self.num_nodes {
            let inc = self.incident_edges(v);
            if self.node_degrees[v] != inc.len() {
                return Err(format!("node {v} degree mismatch"));
            }
            pairs_nm.extend(inc.iter().map(|&e| (v, e)));
        }
        pairs_em.sort_unstable();
        if pairs_em != pairs_nm {
            return Err("node-major and edge-major incidence differ".into());
        }
        Ok(())
    }
}

/// Star-expansion adjacency: every incidence pair is a bipartite edge.
#[derive(Debug, Clone, Copy)]
pub struct StarView<'a> {
    hg: &'a Hypergraph,
}

impl<'a> StarView<'a> {
    pub fn edges_of(&self, v: usize) -> impl Iterator<Item = usize> + 'a {
        self.hg.incident_edges(v).iter().copied()
    }

    pub fn nodes_of(&self, e: usize) -> impl Iterator<Item = usize> + 'a {
        self.hg.edge(e).iter().copied()
    }

    pub fn num_pairs(&self) -> usize {
        self.hg.nnz()
    }

    /// Nodes sharing at least one hyperedge with `v`, ascending, without `v`.
    pub fn neighbors(&self, v: usize) -> Vec<usize> {
        let mut out: Vec<usize> =
            self.edges_of(v).flat_map(|e| self.nodes_of(e)).filter(|&u| u != v).collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}
