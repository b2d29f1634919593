use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use super::BenchError;
use crate::data::rhg::RhgKind;
use crate::data::synthetic::PlantedConfig;
use crate::models::{Budget, ModelConfig, TaskKind};
use crate::perturb::PerturbTarget;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Effectiveness,
    Efficiency,
    Robustness,
    Fairness,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Effectiveness => "effectiveness",
            Suite::Efficiency => "efficiency",
            Suite::Robustness => "robustness",
            Suite::Fairness => "fairness",
        }
    }
}

/// Where the data comes from: a path on disk or a generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetRef {
    Path { path: PathBuf },
    Generated { generate: Generator },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Generator {
    /// Hypergraph-classification corpus cycling through `families`.
    Rhg {
        #[serde(default = "rhg3")]
        families: Vec<RhgKind>,
        count: usize,
        #[serde(default)]
        seed: u64,
    },
    /// Synthetic credit table turned into a kNN hypergraph.
    GermanLike {
        #[serde(default = "german_rows")]
        rows: usize,
        #[serde(default = "german_k")]
        k: usize,
        #[serde(default)]
        seed: u64,
    },
    /// Class-structured random hypergraph.
    Planted {
        #[serde(default)]
        config: PlantedConfig,
    },
}

fn rhg3() -> Vec<RhgKind> {
    RhgKind::RHG3.to_vec()
}

fn german_rows() -> usize {
    1000
}

fn german_k() -> usize {
    4
}

/// One model or several, each compared as its own row.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ModelSpec {
    One(ModelConfig),
    Many(Vec<ModelConfig>),
}

// Hand-written so that field errors (such as unknown keys) survive.
impl<'de> Deserialize<'de> for ModelSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let v = Value::deserialize(d)?;
        if v.is_array() {
            serde_json::from_value(v).map(ModelSpec::Many).map_err(D::Error::custom)
        } else {
            serde_json::from_value(v).map(ModelSpec::One).map_err(D::Error::custom)
        }
    }
}

impl ModelSpec {
    pub fn configs(&self) -> Vec<ModelConfig> {
        match self {
            ModelSpec::One(c) => vec![c.clone()],
            ModelSpec::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridPreset {
    /// The built-in small grid for each model kind.
    Preset,
}

/// Hyperparameter axes, expanded in declaration order. Axis names are model
/// or budget fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Preset(GridPreset),
    Axes(Map<String, Value>),
}

/// Ratios applied one at a time to a pristine copy of the task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbSweep {
    pub target: PerturbTarget,
    pub ratios: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Zero whole feature rows instead of single entries.
    #[serde(default)]
    pub mask_rows: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub dataset: DatasetRef,
    pub task: TaskKind,
    #[serde(default = "default_suite")]
    pub suite: Suite,
    pub model: ModelSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default)]
    pub budget: Budget,
    /// Train/validation/test ratios; defaults depend on the task.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<[f64; 3]>,
    #[serde(default)]
    pub stratified: bool,
    /// Add a singleton hyperedge per node before training.
    #[serde(default = "yes")]
    pub self_loops: bool,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturb: Option<PerturbSweep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

fn default_suite() -> Suite {
    Suite::Effectiveness
}

fn yes() -> bool {
    true
}

pub fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3, 4]
}

impl ExperimentConfig {
    pub fn split_ratios(&self) -> [f64; 3] {
        self.split.unwrap_or(match self.task {
            TaskKind::Node => [0.5, 0.25, 0.25],
            TaskKind::Edge => [0.6, 0.2, 0.2],
            TaskKind::Graph => [0.8, 0.1, 0.1],
        })
    }

    /// Structural checks that do not touch the file system.
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.seeds.is_empty() {
            return Err(BenchError::Config("seed list is empty".into()));
        }
        let models = self.model.configs();
        if models.is_empty() {
            return Err(BenchError::Config("no model given".into()));
        }
        for m in &models {
            m.validate().map_err(|e| BenchError::Config(e.to_string()))?;
        }
        if let Some(GridSpec::Axes(axes)) = &self.grid {
            for (k, v) in axes {
                match v.as_array() {
                    Some(a) if !a.is_empty() => {}
                    _ => return Err(BenchError::Config(format!("grid axis {k:?} is empty or not a list"))),
                }
            }
        }
        if let Some(p) = &self.perturb {
            if p.ratios.is_empty() {
                return Err(BenchError::Config("perturbation sweep has no ratios".into()));
            }
            let ok = |r: f64| match p.target {
                PerturbTarget::FeatureNoise => r.is_finite() && r >= 0.0,
                _ => (0.0..=1.0).contains(&r),
            };
            if let Some(r) = p.ratios.iter().find(|r| !ok(**r)) {
                return Err(BenchError::Config(format!("{} ratio {r} out of range", p.target.name())));
            }
        }
        if self.suite == Suite::Robustness && self.perturb.is_none() {
            return Err(BenchError::Config("robustness suite needs a perturb sweep".into()));
        }
        Ok(())
    }

    /// Canonical JSON: object keys sorted at every level.
    pub fn canonical_json(&self) -> String {
        let v = serde_json::to_value(self).expect("config serialises");
        serde_json::to_string(&sort_keys(v)).expect("value serialises")
    }

    /// SHA-256 of [`Self::canonical_json`], hex encoded.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

fn sort_keys(v: Value) -> Value {
    match v {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            Value::Object(entries.into_iter().map(|(k, v)| (k, sort_keys(v))).collect())
        }
        Value::Array(a) => Value::Array(a.into_iter().map(sort_keys).collect()),
        other => other,
    }
}

/// Parses a config from JSON text. Unknown keys are errors.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, BenchError> {
    let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Reads a config file. A relative dataset path or output directory is
/// taken relative to the file's directory.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, BenchError> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
    let mut cfg =
        parse_config_str(&text).map_err(|e| BenchError::Config(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new(""));
    if let DatasetRef::Path { path: p } = &mut cfg.dataset {
        if p.is_relative() {
            *p = base.join(&*p);
        }
        if !p.exists() {
            return Err(BenchError::Config(format!("dataset path {} does not exist", p.display())));
        }
    }
    if let Some(out) = &mut cfg.output {
        if out.is_relative() {
            *out = base.join(&*out);
        }
    }
    Ok(cfg)
}
