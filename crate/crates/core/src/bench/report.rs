use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::Suite;
use super::BenchError;
use crate::metrics::{MetricReport, RunProfile};
use crate::models::{Budget, ModelConfig, TaskKind};
use crate::perturb::PerturbSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Fail,
}

/// Outcome of one model at one perturbation point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportRecord {
    pub fingerprint: String,
    pub experiment: String,
    pub dataset: String,
    pub task: TaskKind,
    pub suite: Suite,
    pub model: String,
    /// Winning grid point.
    pub model_config: Option<ModelConfig>,
    pub budget: Option<Budget>,
    pub grid_index: Option<usize>,
    pub grid_size: usize,
    pub perturb: Option<PerturbSpec>,
    pub status: Status,
    pub failure: Option<String>,
    /// Mean best validation metric of the winner.
    pub val_mean: Option<f64>,
    /// Test metrics of the winner over seeds.
    pub metrics: Option<MetricReport>,
    /// One per seed of the winner; efficiency suite only.
    pub profiles: Vec<RunProfile>,
    pub timestamp: String,
}

impl ReportRecord {
    /// JSON line with the timestamp blanked, for determinism checks.
    pub fn without_timestamp(&self) -> String {
        let mut r = self.clone();
        r.timestamp.clear();
        serde_json::to_string(&r).expect("record serialises")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReportFormat {
    Json,
    Csv,
    Plot,
}

impl std::str::FromStr for ReportFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "plot" => Ok(ReportFormat::Plot),
            other => Err(BenchError::Config(format!("unknown report format {other:?}"))),
        }
    }
}

pub const RECORDS_FILE: &str = "records.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const PLOT_FILE: &str = "plot.csv";

pub const SUMMARY_METRICS: [&str; 6] = ["acc", "macro_f1", "auroc", "ap", "delta_dp", "delta_eo"];

/// `mean±std` in percent with two decimals.
pub fn format_cell(mean: f64, std: f64) -> String {
    format!("{:.2}±{:.2}", mean * 100.0, std * 100.0)
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> BenchError + '_ {
    move |e| BenchError::Report(format!("{}: {e}", path.display()))
}

/// Writes the requested files into `dir` and returns their paths.
pub fn emit_report(
    records: &[ReportRecord],
    dir: impl AsRef<Path>,
    formats: &[ReportFormat],
) -> Result<Vec<PathBuf>, BenchError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    for f in formats {
        let path = match f {
            ReportFormat::Json => write_records(records, &dir.join(RECORDS_FILE))?,
            ReportFormat::Csv => write_summary(records, &dir.join(SUMMARY_FILE))?,
            ReportFormat::Plot => write_plot(records, &dir.join(PLOT_FILE))?,
        };
        if !written.contains(&path) {
            written.push(path);
        }
    }
    Ok(written)
}

fn write_records(records: &[ReportRecord], path: &Path) -> Result<PathBuf, BenchError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).expect("record serialises");
        writeln!(w, "{line}").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(path.to_path_buf())
}

/// Reads a `records.jsonl` file (or the one inside a directory).
pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<ReportRecord>, BenchError> {
    let mut path = path.as_ref().to_path_buf();
    if path.is_dir() {
        path = path.join(RECORDS_FILE);
    }
    let file = File::open(&path).map_err(io_err(&path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(&path))?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line)
            .map_err(|e| BenchError::Report(format!("{}:{}: {e}", path.display(), i + 1)))?;
        out.push(r);
    }
    Ok(out)
}

fn perturb_cols(r: &ReportRecord) -> (String, String) {
    match &r.perturb {
        Some(p) => (p.target.name().to_string(), format!("{}", p.ratio)),
        None => (String::new(), String::new()),
    }
}

fn write_summary(records: &[ReportRecord], path: &Path) -> Result<PathBuf, BenchError> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header = vec!["model", "dataset", "task", "suite", "target", "ratio"];
    header.extend(SUMMARY_METRICS);
    header.extend(["val", "status"]);
    w.write_record(&header).map_err(csv_err(path))?;
    for r in records {
        let (target, ratio) = perturb_cols(r);
        let mut row = vec![
            r.model.clone(),
            r.dataset.clone(),
            r.task.to_string(),
            r.suite.name().to_string(),
            target,
            ratio,
        ];
        for m in SUMMARY_METRICS {
            row.push(match (&r.status, &r.metrics) {
                (Status::Fail, _) => "FAIL".to_string(),
                (Status::Ok, Some(rep)) => match (rep.mean.get(m), rep.std.get(m)) {
                    (Some(&mean), Some(&std)) => format_cell(mean, std),
                    _ => String::new(),
                },
                (Status::Ok, None) => String::new(),
            });
        }
        row.push(r.val_mean.map(|v| format!("{:.2}", v * 100.0)).unwrap_or_default());
        row.push(match r.status {
            Status::Ok => "ok".into(),
            Status::Fail => "FAIL".into(),
        });
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(path.to_path_buf())
}

/// The headline metric of a task: accuracy, or AUROC for hyperedges.
pub fn primary_metric(task: TaskKind) -> &'static str {
    match task {
        TaskKind::Edge => "auroc",
        TaskKind::Node | TaskKind::Graph => "acc",
    }
}

/// One row per (dataset, target, ratio), one column per model holding the
/// mean headline metric in percent. Failed or missing cells are blank.
fn write_plot(records: &[ReportRecord], path: &Path) -> Result<PathBuf, BenchError> {
    let mut models: Vec<&str> = Vec::new();
    for r in records {
        if !models.contains(&r.model.as_str()) {
            models.push(&r.model);
        }
    }
    let mut rows: Vec<(String, String, String)> = Vec::new();
    let mut cells: BTreeMap<(usize, usize), String> = BTreeMap::new();
    for r in records {
        let (target, ratio) = perturb_cols(r);
        let key = (r.dataset.clone(), target, ratio);
        let row = match rows.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                rows.push(key);
                rows.len() - 1
            }
        };
        let col = models.iter().position(|m| *m == r.model).expect("model listed");
        if let Some(rep) = r.metrics.as_ref().filter(|_| r.status == Status::Ok) {
            if let Some(v) = rep.mean.get(primary_metric(r.task)) {
                cells.insert((row, col), format!("{:.2}", v * 100.0));
            }
        }
    }
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    let mut header = vec!["dataset", "target", "ratio"];
    header.extend(models.iter().copied());
    w.write_record(&header).map_err(csv_err(path))?;
    for (i, (dataset, target, ratio)) in rows.iter().enumerate() {
        let mut row = vec![dataset.clone(), target.clone(), ratio.clone()];
        row.extend((0..models.len()).map(|c| cells.get(&(i, c)).cloned().unwrap_or_default()));
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(path.to_path_buf())
}
