use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Mlp,
    Hgnn,
    Hypergcn,
    Hnhn,
    Unigcnii,
    Allset,
    Tfhnn,
}

impl ModelKind {
    pub const ALL: [ModelKind; 7] = [
        ModelKind::Mlp,
        ModelKind::Hgnn,
        ModelKind::Hypergcn,
        ModelKind::Hnhn,
        ModelKind::Unigcnii,
        ModelKind::Allset,
        ModelKind::Tfhnn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Mlp => "mlp",
            ModelKind::Hgnn => "hgnn",
            ModelKind::Hypergcn => "hypergcn",
            ModelKind::Hnhn => "hnhn",
            ModelKind::Unigcnii => "unigcnii",
            ModelKind::Allset => "allset",
            ModelKind::Tfhnn => "tfhnn",
        }
    }

    /// Whether the layers read the hypergraph during every forward pass.
    pub fn uses_structure_in_training(self) -> bool {
        !matches!(self, ModelKind::Mlp | ModelKind::Tfhnn)
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| ModelError::Config(format!("unknown model kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    LeakyRelu,
    Sigmoid,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    Max,
    Mean,
    /// Elementwise max and min, concatenated.
    MaxMin,
}

/// Architecture hyperparameters. Fields a kind does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Message-passing (or hidden MLP) layers before the task head.
    pub layers: usize,
    pub hidden: usize,
    pub dropout: f64,
    pub activation: Activation,
    /// HNHN node-degree exponent; UniGCNII initial-residual weight.
    pub alpha: f64,
    /// HNHN edge-size exponent; UniGCNII identity-mapping weight.
    pub beta: f64,
    /// TF-HNN propagation steps.
    pub tfhnn_k: usize,
    /// TF-HNN self-loop weight in the propagation operator.
    pub tfhnn_alpha: f64,
    /// Candidate pooling for hyperedge prediction.
    pub edge_pooling: Pooling,
    /// Readout for hypergraph classification.
    pub graph_pooling: Pooling,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            kind: ModelKind::Hgnn,
            layers: 2,
            hidden: 64,
            dropout: 0.5,
            activation: Activation::Relu,
            alpha: 0.0,
            beta: 0.0,
            tfhnn_k: 2,
            tfhnn_alpha: 0.1,
            edge_pooling: Pooling::Mean,
            graph_pooling: Pooling::Mean,
        }
    }
}

impl ModelConfig {
    pub fn new(kind: ModelKind) -> Self {
        let mut cfg = ModelConfig { kind, ..Default::default() };
        if kind == ModelKind::Unigcnii {
            cfg.alpha = 0.1;
            cfg.beta = 0.5;
        }
        cfg
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.layers < 1 {
            return Err(ModelError::Config("layers must be >= 1".into()));
        }
        if self.hidden < 1 {
            return Err(ModelError::Config("hidden must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if self.graph_pooling == Pooling::MaxMin {
            return Err(ModelError::Config("hypergraph readout supports max or mean".into()));
        }
        if self.kind == ModelKind::Tfhnn && !(0.0..=1.0).contains(&self.tfhnn_alpha) {
            return Err(ModelError::Config("tfhnn_alpha outside [0, 1]".into()));
        }
        Ok(())
    }
}
