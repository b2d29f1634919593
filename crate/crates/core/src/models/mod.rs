//! Hypergraph neural networks: layers, model assembly, task heads and the
//! training loop.

mod config;
pub mod layers;
mod model;
mod tfhnn;
mod train;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use config::{Activation, ModelConfig, ModelKind, Pooling};
pub use model::{hypergraph_readout, score_candidates, Bound, Head, Model, Structure};
pub use tfhnn::{clear_tfhnn_cache, tfhnn_precompute};
pub use train::{
    evaluate, train_model, Budget, EdgeTask, EpochStats, EvalSplit, GraphTask, NodeTask, TaskData,
    TrainTiming, TrainedModel,
};

use crate::tensor::TensorError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("structure mismatch: {0}")]
    Structure(String),
    #[error("candidate {0} is empty")]
    EmptyCandidate(usize),
    #[error("readout over an empty hypergraph (segment {0})")]
    EmptyReadout(usize),
    #[error("training diverged at epoch {epoch}: loss {loss}")]
    Diverged { epoch: usize, loss: f64, trace: Vec<EpochStats> },
    #[error("tensor memory cap of {cap} bytes exceeded at epoch {epoch}")]
    OutOfMemory { epoch: usize, cap: u64 },
    #[error("invalid task data: {0}")]
    Task(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Node,
    Edge,
    Graph,
}

impl std::fmt::Display for TaskKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TaskKind::Node => "node",
            TaskKind::Edge => "edge",
            TaskKind::Graph => "graph",
        })
    }
}

/// Node sets to be scored as potential hyperedges, with 1 marking true ones.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub candidates: Vec<Vec<usize>>,
    pub labels: Vec<u8>,
}

impl CandidateSet {
    pub fn new(candidates: Vec<Vec<usize>>, labels: Vec<u8>) -> Result<Self, ModelError> {
        if candidates.len() != labels.len() {
            return Err(ModelError::Task(format!(
                "{} candidates but {} labels",
                candidates.len(),
                labels.len()
            )));
        }
        if let Some(k) = candidates.iter().position(Vec::is_empty) {
            return Err(ModelError::EmptyCandidate(k));
        }
        Ok(CandidateSet { candidates, labels })
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Positives followed by negatives.
    pub fn from_parts(positives: Vec<Vec<usize>>, negatives: Vec<Vec<usize>>) -> Result<Self, ModelError> {
        let labels =
            std::iter::repeat_n(1, positives.len()).chain(std::iter::repeat_n(0, negatives.len())).collect();
        let mut candidates = positives;
        candidates.extend(negatives);
        CandidateSet::new(candidates, labels)
    }
}
