use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use super::config::{DatasetRef, ExperimentConfig, Generator, PerturbSweep, Suite};
use super::grid::{expand_grid, GridPoint};
use super::report::{ReportRecord, Status};
use super::BenchError;
use crate::data::{
    edge_task, generate_german_like, generate_rhg_corpus, graph_task, load_graph_dataset, load_node_dataset,
    node_task, split, synthetic::planted_partition, with_self_loops, Dataset,
};
use crate::metrics::{aggregate, profile, RunProfile};
use crate::models::{
    evaluate, train_model, EvalSplit, ModelConfig, ModelError, ModelKind, TaskData, TaskKind, TrainedModel,
};
use crate::perturb::{
    corrupt_labels, mask_features, noise_features, perturb_structure, sparsify_supervision, MaskMode,
    PerturbSpec, PerturbTarget, StructureMode,
};
use crate::tensor::memory::{memory_cap_from_env, set_memory_cap};

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Worker threads for independent (grid point, seed) cells.
    pub jobs: usize,
    /// Replaces the seeds in the config.
    pub seeds: Option<Vec<u64>>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { jobs: 1, seeds: None }
    }
}

/// Materialises the dataset a config points at. A directory is a node-level
/// dataset; a file is a JSON-lines hypergraph collection.
pub fn load_dataset(r: &DatasetRef) -> Result<Dataset, BenchError> {
    let ds = match r {
        DatasetRef::Path { path } if path.is_dir() => load_node_dataset(path)?,
        DatasetRef::Path { path } => load_graph_dataset(path)?,
        DatasetRef::Generated { generate } => match generate {
            Generator::Rhg { families, count, seed } => {
                if families.is_empty() || *count == 0 {
                    return Err(BenchError::Config("rhg generator needs families and a count".into()));
                }
                generate_rhg_corpus(families, *count, *seed)
            }
            Generator::GermanLike { rows, k, seed } => generate_german_like(*rows, *seed).into_dataset(*k)?,
            Generator::Planted { config } => planted_partition(config),
        },
    };
    ds.validate()?;
    Ok(ds)
}

/// The clean task for one trial seed. The seed also fixes the split.
pub fn build_task(cfg: &ExperimentConfig, ds: &Dataset, seed: u64) -> Result<TaskData, BenchError> {
    let ratios = cfg.split_ratios();
    match cfg.task {
        TaskKind::Node => {
            let strata = cfg.stratified.then_some(ds.labels.as_slice());
            let parts = split(ds.hypergraph().num_nodes(), ratios, seed, strata)?;
            let mut t = node_task(ds, &parts)?;
            if cfg.self_loops {
                t.hypergraph = Arc::new(with_self_loops(&t.hypergraph));
            }
            Ok(TaskData::Node(t))
        }
        TaskKind::Edge => Ok(TaskData::Edge(edge_task(ds, ratios, seed, cfg.self_loops)?)),
        TaskKind::Graph => {
            let strata = cfg.stratified.then_some(ds.labels.as_slice());
            let parts = split(ds.hypergraphs.len(), ratios, seed, strata)?;
            let mut t = graph_task(ds, &parts)?;
            if cfg.self_loops {
                t.hypergraph = Arc::new(with_self_loops(&t.hypergraph));
            }
            Ok(TaskData::Graph(t))
        }
    }
}

/// Returns a perturbed copy of `task`. Structure operators act on the
/// hypergraph the model sees, feature operators on the input features and
/// label operators on the training supervision only, so validation and test
/// labels stay clean.
pub fn apply_perturbation(
    task: &TaskData,
    spec: &PerturbSpec,
    mask: MaskMode,
) -> Result<TaskData, BenchError> {
    let mut out = task.clone();
    let (hg, x) = match &mut out {
        TaskData::Node(t) => (&mut t.hypergraph, &mut t.features),
        TaskData::Edge(t) => (&mut t.hypergraph, &mut t.features),
        TaskData::Graph(t) => (&mut t.hypergraph, &mut t.features),
    };
    let (ratio, seed) = (spec.ratio, spec.seed);
    match spec.target {
        PerturbTarget::StructureRemove => {
            *hg = Arc::new(perturb_structure(hg, ratio, StructureMode::Remove, seed)?)
        }
        PerturbTarget::StructureAdd => {
            *hg = Arc::new(perturb_structure(hg, ratio, StructureMode::Add, seed)?)
        }
        PerturbTarget::FeatureMask => *x = Arc::new(mask_features(x, ratio, mask, seed)?),
        PerturbTarget::FeatureNoise => *x = Arc::new(noise_features(x, ratio, seed)?),
        PerturbTarget::LabelNoise => match &mut out {
            TaskData::Node(t) => t.labels = corrupt_labels(&t.labels, &t.train, ratio, t.num_classes, seed)?,
            TaskData::Graph(t) => t.labels = corrupt_labels(&t.labels, &t.train, ratio, t.num_classes, seed)?,
            TaskData::Edge(_) => {
                return Err(BenchError::Config("label noise has no meaning for hyperedge prediction".into()))
            }
        },
        PerturbTarget::LabelSparsify => match &mut out {
            TaskData::Node(t) => t.train = sparsify_supervision(&t.train, 1.0 - ratio, seed)?,
            TaskData::Graph(t) => t.train = sparsify_supervision(&t.train, 1.0 - ratio, seed)?,
            TaskData::Edge(t) => {
                let idx: Vec<usize> = (0..t.train.len()).collect();
                let kept = sparsify_supervision(&idx, 1.0 - ratio, seed)?;
                t.train = Arc::new(kept.into_iter().map(|i| t.train[i].clone()).collect());
            }
        },
    }
    Ok(out)
}

type Cell = Result<(TrainedModel, RunProfile), String>;

/// Trains every (grid point, seed) cell, spreading cells over `jobs` scoped
/// threads. Results come back in cell order whatever the thread schedule.
fn run_cells(points: &[GridPoint], tasks: &[(u64, Result<TaskData, String>)], jobs: usize) -> Vec<Cell> {
    let cells: Vec<(usize, usize)> =
        (0..points.len()).flat_map(|p| (0..tasks.len()).map(move |s| (p, s))).collect();
    let results: Mutex<Vec<Option<Cell>>> = Mutex::new(vec![None; cells.len()]);
    let next = AtomicUsize::new(0);
    let cap = memory_cap_from_env();
    let work = || {
        set_memory_cap(cap);
        loop {
            let i = next.fetch_add(1, Ordering::Relaxed);
            let Some(&(p, s)) = cells.get(i) else { break };
            let (seed, task) = &tasks[s];
            let cell = match task {
                Err(e) => Err(e.clone()),
                Ok(task) => {
                    let point = &points[p];
                    let (res, prof) = profile(|| train_model(&point.model, task, *seed, &point.budget));
                    res.map(|t| (t, prof)).map_err(|e| describe_failure(&e))
                }
            };
            results.lock().expect("result lock")[i] = Some(cell);
        }
        set_memory_cap(None);
    };
    let jobs = jobs.max(1).min(cells.len().max(1));
    if jobs == 1 {
        work();
    } else {
        std::thread::scope(|scope| {
            for _ in 0..jobs {
                scope.spawn(work);
            }
        });
    }
    results.into_inner().expect("result lock").into_iter().map(|c| c.expect("every cell ran")).collect()
}

fn describe_failure(e: &ModelError) -> String {
    match e {
        ModelError::OutOfMemory { epoch, cap } => format!("out of memory at epoch {epoch} (cap {cap} bytes)"),
        ModelError::Diverged { epoch, loss, .. } => format!("diverged at epoch {epoch} (loss {loss})"),
        other => other.to_string(),
    }
}

/// Picks the grid point with the best mean validation metric (ties to the
/// earlier point) among points whose every seed finished, then evaluates the
/// test split for that point only.
#[allow(clippy::too_many_arguments)]
fn select_and_report(
    cfg: &ExperimentConfig,
    base: &ModelConfig,
    points: &[GridPoint],
    tasks: &[(u64, Result<TaskData, String>)],
    cells: Vec<Cell>,
    perturb: Option<PerturbSpec>,
    dataset: &str,
    fingerprint: &str,
) -> ReportRecord {
    let seeds = tasks.len();
    let mut record = ReportRecord {
        fingerprint: fingerprint.to_string(),
        experiment: cfg.name.clone(),
        dataset: dataset.to_string(),
        task: cfg.task,
        suite: cfg.suite,
        model: base.kind.name().to_string(),
        model_config: None,
        budget: None,
        grid_index: None,
        grid_size: points.len(),
        perturb,
        status: Status::Fail,
        failure: None,
        val_mean: None,
        metrics: None,
        profiles: Vec::new(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
    };
    let mut best: Option<(usize, f64)> = None;
    for p in 0..points.len() {
        let row = &cells[p * seeds..(p + 1) * seeds];
        if let Some(Err(e)) = row.iter().find(|c| c.is_err()) {
            record.failure.get_or_insert_with(|| e.clone());
            continue;
        }
        let vals: Vec<f64> = row.iter().map(|c| c.as_ref().expect("checked").0.best_val).collect();
        let mean = vals.iter().sum::<f64>() / vals.len() as f64;
        if best.is_none_or(|(_, b)| mean > b) {
            best = Some((p, mean));
        }
    }
    let Some((winner, val_mean)) = best else {
        return record;
    };
    let row = &cells[winner * seeds..(winner + 1) * seeds];
    let mut runs = Vec::with_capacity(seeds);
    for ((seed, task), cell) in tasks.iter().zip(row) {
        let (trained, prof) = cell.as_ref().expect("winner row finished");
        let task = task.as_ref().expect("winner row had a task");
        match evaluate(trained, task, EvalSplit::Test) {
            Ok(m) => runs.push((*seed, m)),
            Err(e) => {
                record.failure = Some(format!("evaluation failed: {e}"));
                return record;
            }
        }
        if cfg.suite == Suite::Efficiency {
            record.profiles.push(prof.clone());
        }
    }
    record.status = Status::Ok;
    record.failure = None;
    record.grid_index = Some(winner);
    record.model_config = Some(points[winner].model.clone());
    record.budget = Some(points[winner].budget.clone());
    record.val_mean = Some(val_mean);
    record.metrics = Some(aggregate(cfg.task, &runs));
    record
}

fn perturb_points(sweep: Option<&PerturbSweep>) -> Vec<Option<(PerturbSweep, f64)>> {
    match sweep {
        None => vec![None],
        Some(s) => s.ratios.iter().map(|&r| Some((s.clone(), r))).collect(),
    }
}

/// Runs the whole experiment: every perturbation point, model, grid point and
/// seed. Failed cells are reported, not raised. The efficiency suite runs
/// cells one at a time so that timings do not compete for cores.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<ReportRecord>, BenchError> {
    cfg.validate()?;
    let ds = load_dataset(&cfg.dataset)?;
    let want_graph = cfg.task == TaskKind::Graph;
    if want_graph != (ds.level == TaskKind::Graph) {
        return Err(BenchError::Config(format!(
            "{} task does not fit the {} dataset {}",
            cfg.task, ds.level, ds.name
        )));
    }
    let seeds = opts.seeds.clone().unwrap_or_else(|| cfg.seeds.clone());
    if seeds.is_empty() {
        return Err(BenchError::Config("seed list is empty".into()));
    }
    let fingerprint = cfg.fingerprint();
    let mut models = cfg.model.configs();
    if cfg.suite == Suite::Fairness && !models.iter().any(|m| m.kind == ModelKind::Mlp) {
        models.push(ModelConfig::new(ModelKind::Mlp));
    }
    let jobs = if cfg.suite == Suite::Efficiency { 1 } else { opts.jobs };
    let clean: Vec<(u64, TaskData)> =
        seeds.iter().map(|&s| build_task(cfg, &ds, s).map(|t| (s, t))).collect::<Result<_, _>>()?;

    let mut records = Vec::new();
    for point in perturb_points(cfg.perturb.as_ref()) {
        let spec = point.as_ref().map(|(s, r)| PerturbSpec { target: s.target, ratio: *r, seed: s.seed });
        let tasks: Vec<(u64, Result<TaskData, String>)> = clean
            .iter()
            .map(|(seed, task)| {
                let t = match &point {
                    None => Ok(task.clone()),
                    Some((sweep, ratio)) => {
                        let trial = PerturbSpec {
                            target: sweep.target,
                            ratio: *ratio,
                            seed: sweep.seed.wrapping_add(*seed),
                        };
                        let mask = if sweep.mask_rows { MaskMode::Rows } else { MaskMode::Entries };
                        apply_perturbation(task, &trial, mask).map_err(|e| e.to_string())
                    }
                };
                (*seed, t)
            })
            .collect();
        for base in &models {
            let points = expand_grid(cfg.grid.as_ref(), base, &cfg.budget)?;
            let cells = run_cells(&points, &tasks, jobs);
            let record = select_and_report(cfg, base, &points, &tasks, cells, spec, &ds.name, &fingerprint);
            log::info!(
                "{} {} {:?}: {:?}",
                ds.name,
                base.kind,
                spec.map(|s| (s.target.name(), s.ratio)),
                record.status
            );
            records.push(record);
        }
    }
    Ok(records)
}

/// Loads a config file and runs it.
pub fn run_config_file(path: impl AsRef<Path>, opts: &RunOptions) -> Result<Vec<ReportRecord>, BenchError> {
    let cfg = super::config::parse_config(path)?;
    run_experiment(&cfg, opts)
}
