use std::collections::HashSet;
use std::sync::Arc;

use super::negative::build_eval_negatives;
use super::split::{split, SplitAssignment};
use super::{DataError, Dataset};
use crate::hypergraph::Hypergraph;
use crate::models::{CandidateSet, EdgeTask, GraphTask, NodeTask, TaskKind};
use crate::tensor::Tensor;

/// Adds a singleton hyperedge `{v}` for every node that lacks one.
pub fn with_self_loops(hg: &Hypergraph) -> Hypergraph {
    let mut edges = hg.edge_lists();
    let mut has = vec![false; hg.num_nodes()];
    for e in &edges {
        if let [v] = e.as_slice() {
            has[*v] = true;
        }
    }
    edges.extend((0..hg.num_nodes()).filter(|&v| !has[v]).map(|v| vec![v]));
    Hypergraph::new(&edges, hg.num_nodes()).expect("valid edges")
}

fn node_level(ds: &Dataset) -> Result<&Hypergraph, DataError> {
    if ds.level == TaskKind::Graph {
        return Err(DataError::Invalid(format!(
            "{} holds many hypergraphs; node and hyperedge tasks need one",
            ds.name
        )));
    }
    Ok(ds.hypergraph())
}

/// Node classification task over `ds` with the given split of its nodes.
pub fn node_task(ds: &Dataset, assignment: &SplitAssignment) -> Result<NodeTask, DataError> {
    let hg = node_level(ds)?;
    let n = hg.num_nodes();
    if assignment.train.iter().chain(&assignment.val).chain(&assignment.test).any(|&i| i >= n) {
        return Err(DataError::Invalid("split indices exceed node count".into()));
    }
    Ok(NodeTask {
        hypergraph: Arc::new(hg.clone()),
        features: Arc::new(ds.features[0].clone()),
        labels: ds.labels.clone(),
        num_classes: ds.num_classes,
        train: assignment.train.clone(),
        val: assignment.val.clone(),
        test: assignment.test.clone(),
        sensitive: ds.sensitive.clone(),
    })
}

/// Distinct hyperedges with at least two members, in first-seen order.
pub fn positive_edges(hg: &Hypergraph) -> Vec<Vec<usize>> {
    let mut seen = HashSet::new();
    hg.edges().filter(|e| e.len() >= 2).filter(|e| seen.insert(e.to_vec())).map(<[usize]>::to_vec).collect()
}

/// Hyperedge prediction over the positive hyperedges of `ds`. The model
/// structure holds training hyperedges only (plus singleton self-loops if
/// requested). Each evaluation split gets four negative variants: test sets
/// use seeds `seed + 1001..=1004`, validation sets `seed + 2001..=2004`.
pub fn edge_task(ds: &Dataset, ratios: [f64; 3], seed: u64, self_loops: bool) -> Result<EdgeTask, DataError> {
    let hg = node_level(ds)?;
    let n = hg.num_nodes();
    let positives = positive_edges(hg);
    let parts = split(positives.len(), ratios, seed, None)?;
    let take = |idx: &[usize]| -> Vec<Vec<usize>> { idx.iter().map(|&i| positives[i].clone()).collect() };
    let train = take(&parts.train);
    let val = take(&parts.val);
    let test = take(&parts.test);
    let known: HashSet<Vec<usize>> = positives.iter().cloned().collect();
    let all = Hypergraph::new(&positives, n)?;
    let sampler = Hypergraph::new(&train, n)?;
    let structure = if self_loops { with_self_loops(&sampler) } else { sampler.clone() };

    let variants = |pos: &[Vec<usize>], base: u64| -> Result<Vec<CandidateSet>, DataError> {
        (1..=4)
            .map(|k| {
                let batch = build_eval_negatives(&all, &known, pos.len(), seed.wrapping_add(base + k))?;
                CandidateSet::from_parts(pos.to_vec(), batch.candidates.candidates)
                    .map_err(|e| DataError::Invalid(e.to_string()))
            })
            .collect()
    };
    let val = variants(&val, 2000)?;
    let test = variants(&test, 1000)?;
    Ok(EdgeTask {
        hypergraph: Arc::new(structure),
        features: Arc::new(ds.features[0].clone()),
        sampler: Arc::new(sampler),
        known: Arc::new(known),
        val,
        test,
        train: Arc::new(train),
    })
}

/// Hypergraph classification over a block-diagonal union of every
/// hypergraph in `ds`; the split indexes hypergraphs.
pub fn graph_task(ds: &Dataset, assignment: &SplitAssignment) -> Result<GraphTask, DataError> {
    if ds.level != TaskKind::Graph {
        return Err(DataError::Invalid(format!("{} is not a hypergraph collection", ds.name)));
    }
    let parts: Vec<&Hypergraph> = ds.hypergraphs.iter().collect();
    let (union, offsets) = Hypergraph::disjoint_union(&parts);
    let width = ds.num_features();
    let mut data = Vec::with_capacity(union.num_nodes() * width);
    for x in &ds.features {
        data.extend_from_slice(x.as_slice());
    }
    let features =
        Tensor::from_vec(union.num_nodes(), width, data).map_err(|e| DataError::Invalid(e.to_string()))?;
    let segments: Vec<Vec<usize>> =
        offsets.iter().zip(&ds.hypergraphs).map(|(&o, hg)| (o..o + hg.num_nodes()).collect()).collect();
    Ok(GraphTask {
        hypergraph: Arc::new(union),
        features: Arc::new(features),
        segments: Arc::new(segments),
        labels: ds.labels.clone(),
        num_classes: ds.num_classes,
        train: assignment.train.clone(),
        val: assignment.val.clone(),
        test: assignment.test.clone(),
    })
}
