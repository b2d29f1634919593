//! Config-driven experiments: grid search over seeds, model selection on
//! validation, perturbation sweeps and report files.

mod config;
mod grid;
mod report;
mod runner;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{
    default_seeds, parse_config, parse_config_str, DatasetRef, ExperimentConfig, Generator, GridPreset,
    GridSpec, ModelSpec, PerturbSweep, Suite,
};
pub use grid::{expand_grid, preset_axes, GridPoint};
pub use report::{
    emit_report, format_cell, primary_metric, read_records, ReportFormat, ReportRecord, Status, PLOT_FILE,
    RECORDS_FILE, SUMMARY_FILE, SUMMARY_METRICS,
};
pub use runner::{apply_perturbation, build_task, load_dataset, run_config_file, run_experiment, RunOptions};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] crate::data::DataError),
    #[error(transparent)]
    Model(#[from] crate::models::ModelError),
    #[error(transparent)]
    Perturb(#[from] crate::perturb::PerturbError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("report: {0}")]
    Report(String),
}
