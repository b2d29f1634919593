use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::models::{ModelError, TrainedModel};
use crate::tensor::{memory_high_water, reset_high_water};

/// Cost of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunProfile {
    pub wall_time_to_best_s: f64,
    pub total_wall_time_s: f64,
    /// Tensor-allocator high-water mark on the training thread.
    pub peak_memory_bytes: u64,
    pub epochs_run: usize,
    /// Sparse products executed inside the epoch loop.
    pub loop_sparse_products: u64,
    /// Process resident set size after the run, where the OS reports it.
    /// Informational only: it covers every thread and the allocator's slack.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rss_bytes: Option<u64>,
}

/// Runs `train` inside a fresh memory window and reports its cost.
pub fn profile<F>(train: F) -> (Result<TrainedModel, ModelError>, RunProfile)
where
    F: FnOnce() -> Result<TrainedModel, ModelError>,
{
    reset_high_water();
    let start = Instant::now();
    let result = train();
    let elapsed = start.elapsed().as_secs_f64();
    let peak = memory_high_water();
    let profile = match &result {
        Ok(t) => RunProfile {
            wall_time_to_best_s: t.timing.wall_time_to_best_s,
            total_wall_time_s: t.timing.total_wall_time_s,
            peak_memory_bytes: peak,
            epochs_run: t.timing.epochs_run,
            loop_sparse_products: t.timing.loop_sparse_products,
            rss_bytes: resident_bytes(),
        },
        Err(_) => RunProfile {
            wall_time_to_best_s: elapsed,
            total_wall_time_s: elapsed,
            peak_memory_bytes: peak,
            epochs_run: 0,
            loop_sparse_products: 0,
            rss_bytes: resident_bytes(),
        },
    };
    (result, profile)
}

fn resident_bytes() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmRSS:"))?;
    let kb: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kb * 1024)
}
