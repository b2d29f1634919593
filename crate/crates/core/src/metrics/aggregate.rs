use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::models::TaskKind;

/// Per-seed metric values with their mean and sample standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub task: TaskKind,
    pub seeds: Vec<u64>,
    pub per_seed: BTreeMap<String, Vec<f64>>,
    pub mean: BTreeMap<String, f64>,
    pub std: BTreeMap<String, f64>,
}

/// Combines per-seed metric maps. A metric missing from any run is dropped so
/// that every list has one value per seed. Results do not depend on the order
/// of `runs`.
pub fn aggregate(task: TaskKind, runs: &[(u64, BTreeMap<String, f64>)]) -> MetricReport {
    let mut sorted: Vec<&(u64, BTreeMap<String, f64>)> = runs.iter().collect();
    sorted.sort_by_key(|(seed, _)| *seed);
    let seeds: Vec<u64> = sorted.iter().map(|(s, _)| *s).collect();
    let mut per_seed = BTreeMap::new();
    if let Some((_, first)) = sorted.first() {
        for name in first.keys() {
            let values: Option<Vec<f64>> = sorted.iter().map(|(_, m)| m.get(name).copied()).collect();
            if let Some(values) = values {
                per_seed.insert(name.clone(), values);
            }
        }
    }
    let mut mean = BTreeMap::new();
    let mut std = BTreeMap::new();
    for (name, values) in &per_seed {
        let (m, s) = mean_std(values);
        mean.insert(name.clone(), m);
        std.insert(name.clone(), s);
    }
    MetricReport { task, seeds, per_seed, mean, std }
}

/// Mean and `n - 1` standard deviation; a single value has deviation 0.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let Some(&first) = values.first() else {
        return (f64::NAN, 0.0);
    };
    // Shifting by the first value keeps identical inputs exact.
    let mean = first + values.iter().map(|v| v - first).sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}
