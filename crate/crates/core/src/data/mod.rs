//! Datasets: on-disk formats, synthetic generators, splits, negative
//! sampling and task assembly.

mod io;
pub mod negative;
mod prepare;
pub mod rhg;
mod split;
pub mod synthetic;
mod tabular;

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{load_graph_dataset, load_node_dataset, save_dataset, save_graph_dataset, save_node_dataset};
pub use negative::{
    build_eval_negatives, cns_sample, eval_negative_variants, mns_sample, sample_mixed, sns_sample,
    NegativeBatch, SamplerKind,
};
pub use prepare::{edge_task, graph_task, node_task, positive_edges, with_self_loops};
pub use rhg::{generate_rhg, generate_rhg_corpus, RhgKind};
pub use split::{split, SplitAssignment};
pub use tabular::{generate_german_like, knn_hypergraph, standardize_columns, GermanLike};

use crate::hypergraph::{Hypergraph, HypergraphError};
use crate::models::TaskKind;
use crate::tensor::Tensor;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Hypergraph(#[from] HypergraphError),
}

impl DataError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        DataError::Io { path: path.into(), source }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        DataError::Parse { path: path.into(), line, message: message.into() }
    }
}

/// One hypergraph (node and hyperedge tasks) or many (hypergraph
/// classification), with features, labels and an optional binary sensitive
/// attribute.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub level: TaskKind,
    pub hypergraphs: Vec<Hypergraph>,
    pub features: Vec<Tensor>,
    /// Per node for node-level data, per hypergraph for graph-level data.
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub sensitive: Option<Vec<u8>>,
}

impl Dataset {
    /// Checks shapes and label ranges.
    pub fn validate(&self) -> Result<(), DataError> {
        if self.hypergraphs.len() != self.features.len() {
            return Err(DataError::Invalid(format!(
                "{} hypergraphs but {} feature matrices",
                self.hypergraphs.len(),
                self.features.len()
            )));
        }
        if self.hypergraphs.is_empty() {
            return Err(DataError::Invalid("dataset has no hypergraph".into()));
        }
        for (i, (hg, x)) in self.hypergraphs.iter().zip(&self.features).enumerate() {
            if x.rows() != hg.num_nodes() {
                return Err(DataError::Invalid(format!(
                    "hypergraph {i}: {} feature rows for {} nodes",
                    x.rows(),
                    hg.num_nodes()
                )));
            }
        }
        let units = match self.level {
            TaskKind::Graph => self.hypergraphs.len(),
            _ => {
                if self.hypergraphs.len() != 1 {
                    return Err(DataError::Invalid("node-level data holds one hypergraph".into()));
                }
                self.hypergraphs[0].num_nodes()
            }
        };
        if self.labels.len() != units {
            return Err(DataError::Invalid(format!("{} labels for {units} items", self.labels.len())));
        }
        if let Some(&bad) = self.labels.iter().find(|&&y| y >= self.num_classes) {
            return Err(DataError::Invalid(format!("label {bad} outside {} classes", self.num_classes)));
        }
        if let Some(s) = &self.sensitive {
            if self.level == TaskKind::Graph || s.len() != units {
                return Err(DataError::Invalid("sensitive attribute must cover every node".into()));
            }
            if s.iter().any(|&v| v > 1) {
                return Err(DataError::Invalid("sensitive values must be 0 or 1".into()));
            }
        }
        Ok(())
    }

    /// The single hypergraph of node-level data.
    pub fn hypergraph(&self) -> &Hypergraph {
        &self.hypergraphs[0]
    }

    pub fn num_features(&self) -> usize {
        self.features.first().map_or(0, Tensor::cols)
    }

    /// One-line description used by the CLI.
    pub fn summary(&self) -> DatasetSummary {
        let nodes: usize = self.hypergraphs.iter().map(Hypergraph::num_nodes).sum();
        let edges: usize = self.hypergraphs.iter().map(Hypergraph::num_edges).sum();
        DatasetSummary {
            name: self.name.clone(),
            level: self.level,
            hypergraphs: self.hypergraphs.len(),
            nodes,
            edges,
            features: self.num_features(),
            classes: self.num_classes,
            sensitive: self.sensitive.is_some(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub level: TaskKind,
    pub hypergraphs: usize,
    pub nodes: usize,
    pub edges: usize,
    pub features: usize,
    pub classes: usize,
    pub sensitive: bool,
}
