use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::config::{GridPreset, GridSpec};
use super::BenchError;
use crate::models::{Budget, ModelConfig, ModelKind};

/// One hyperparameter setting: architecture plus optimiser budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub model: ModelConfig,
    pub budget: Budget,
}

const BUDGET_KEYS: [&str; 4] = ["epochs", "lr", "weight_decay", "patience"];

/// Small default grid for each model kind.
pub fn preset_axes(kind: ModelKind) -> Map<String, Value> {
    let axes = match kind {
        ModelKind::Unigcnii => json!({
            "layers": [2, 4],
            "dropout": [0.2, 0.5],
            "lr": [0.01, 0.001],
        }),
        ModelKind::Hnhn => json!({
            "hidden": [64, 128],
            "dropout": [0.2, 0.5],
            "lr": [0.01, 0.001],
        }),
        ModelKind::Tfhnn => json!({
            "tfhnn_k": [1, 2, 3],
            "tfhnn_alpha": [0.1, 0.3],
            "lr": [0.01, 0.001],
        }),
        ModelKind::Mlp | ModelKind::Hgnn | ModelKind::Hypergcn | ModelKind::Allset => json!({
            "hidden": [64, 128],
            "dropout": [0.2, 0.5],
            "lr": [0.01, 0.001],
        }),
    };
    match axes {
        Value::Object(m) => m,
        _ => unreachable!(),
    }
}

/// Cartesian product of the axes over `base`, the first axis varying
/// slowest. Without a spec the base point is the only point.
pub fn expand_grid(
    spec: Option<&GridSpec>,
    base: &ModelConfig,
    budget: &Budget,
) -> Result<Vec<GridPoint>, BenchError> {
    let axes = match spec {
        None => Map::new(),
        Some(GridSpec::Preset(GridPreset::Preset)) => preset_axes(base.kind),
        Some(GridSpec::Axes(a)) => a.clone(),
    };
    let mut axis_values: Vec<(&String, &Vec<Value>)> = Vec::with_capacity(axes.len());
    for (name, v) in &axes {
        match v.as_array() {
            Some(list) if !list.is_empty() => axis_values.push((name, list)),
            _ => return Err(BenchError::Config(format!("grid axis {name:?} is empty or not a list"))),
        }
    }
    let base_model = serde_json::to_value(base).expect("model config serialises");
    let base_budget = serde_json::to_value(budget).expect("budget serialises");
    let total: usize = axis_values.iter().map(|(_, l)| l.len()).product();
    let mut points = Vec::with_capacity(total);
    for mut flat in 0..total {
        let mut model = base_model.clone();
        let mut budget = base_budget.clone();
        let mut choice = vec![0; axis_values.len()];
        for (i, (_, list)) in axis_values.iter().enumerate().rev() {
            choice[i] = flat % list.len();
            flat /= list.len();
        }
        for ((name, list), &c) in axis_values.iter().zip(&choice) {
            let target = if BUDGET_KEYS.contains(&name.as_str()) { &mut budget } else { &mut model };
            target[name.as_str()] = list[c].clone();
        }
        let model: ModelConfig =
            serde_json::from_value(model).map_err(|e| BenchError::Config(format!("grid: {e}")))?;
        model.validate().map_err(|e| BenchError::Config(format!("grid: {e}")))?;
        let budget: Budget =
            serde_json::from_value(budget).map_err(|e| BenchError::Config(format!("grid: {e}")))?;
        points.push(GridPoint { model, budget });
    }
    Ok(points)
}
