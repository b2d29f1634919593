//! End-to-end determinism of the benchmark runner.

use super::Check;
use crate::common::Outcome;
use hgbench_core::bench::{parse_config_str, run_experiment, RunOptions};

const NODE: &str = r#"{
    "name": "determinism-node",
    "dataset": {"generate": {"kind": "planted", "config": {"nodes": 90, "edges": 70, "seed": 3}}},
    "task": "node",
    "model": [{"kind": "hgnn", "hidden": 8}, {"kind": "tfhnn", "hidden": 8}, {"kind": "allset", "hidden": 8}],
    "grid": {"dropout": [0.0, 0.5]},
    "budget": {"epochs": 15, "patience": 5},
    "seeds": [0, 1],
    "perturb": {"target": "structure_remove", "ratios": [0.0, 0.4], "seed": 9}
}"#;

const EDGE: &str = r#"{
    "name": "determinism-edge",
    "dataset": {"generate": {"kind": "planted", "config": {"nodes": 80, "edges": 90, "seed": 5}}},
    "task": "edge",
    "model": [{"kind": "hnhn", "hidden": 8}, {"kind": "unigcnii", "hidden": 8}],
    "budget": {"epochs": 10},
    "seeds": [4]
}"#;

fn lines(config: &str, jobs: usize) -> Result<Vec<String>, String> {
    let cfg = parse_config_str(config).map_err(|e| e.to_string())?;
    let records = run_experiment(&cfg, &RunOptions { jobs, seeds: None }).map_err(|e| e.to_string())?;
    Ok(records.iter().map(|r| r.without_timestamp()).collect())
}

/// Two runs of the same config, one serial and one on worker threads, give
/// byte-identical records once the timestamp is blanked.
pub fn records_are_reproducible() -> Outcome {
    for config in [NODE, EDGE] {
        let first = lines(config, 1)?;
        let second = lines(config, 3)?;
        if first.is_empty() {
            return Err("no records".into());
        }
        if first != second {
            let at = first.iter().zip(&second).position(|(a, b)| a != b);
            return Err(format!("records differ at {at:?} ({} vs {} lines)", first.len(), second.len()));
        }
    }
    Ok(())
}

pub const DETERMINISM: &[Check] = &[("records_are_reproducible", records_are_reproducible)];
