use std::collections::{BTreeMap, HashSet};
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::model::{Head, Model, Structure};
use super::{CandidateSet, ModelError, TaskKind};
use crate::data::negative::sample_mixed;
use crate::hypergraph::Hypergraph;
use crate::metrics;
use crate::tensor::memory::{memory_cap, memory_cap_exceeded};
use crate::tensor::{sparse_product_count, Adam, AdamConfig, Tape, Tensor};

/// Optimisation budget shared by every model in a comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budget {
    pub epochs: usize,
    pub lr: f64,
    pub weight_decay: f64,
    /// Stop after this many epochs without a strictly better validation
    /// metric.
    pub patience: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { epochs: 200, lr: 0.01, weight_decay: 5e-4, patience: 100 }
    }
}

/// Node classification on one hypergraph. `labels` are the training targets;
/// entries outside `train` are the clean evaluation labels.
#[derive(Debug, Clone)]
pub struct NodeTask {
    pub hypergraph: Arc<Hypergraph>,
    pub features: Arc<Tensor>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub sensitive: Option<Vec<u8>>,
}

/// Hyperedge prediction. The model sees `hypergraph`, built from training
/// hyperedges only; training negatives are redrawn every epoch from `sampler`.
#[derive(Debug, Clone)]
pub struct EdgeTask {
    pub hypergraph: Arc<Hypergraph>,
    pub features: Arc<Tensor>,
    pub sampler: Arc<Hypergraph>,
    pub known: Arc<HashSet<Vec<usize>>>,
    pub train: Arc<Vec<Vec<usize>>>,
    /// Independent validation variants; metrics are averaged over them.
    pub val: Vec<CandidateSet>,
    pub test: Vec<CandidateSet>,
}

/// Hypergraph classification over a block-diagonal batch. `segments[g]`
/// lists the nodes of hypergraph `g` inside `hypergraph`.
#[derive(Debug, Clone)]
pub struct GraphTask {
    pub hypergraph: Arc<Hypergraph>,
    pub features: Arc<Tensor>,
    pub segments: Arc<Vec<Vec<usize>>>,
    pub labels: Vec<usize>,
    pub num_classes: usize,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone)]
pub enum TaskData {
    Node(NodeTask),
    Edge(EdgeTask),
    Graph(GraphTask),
}

impl TaskData {
    pub fn kind(&self) -> TaskKind {
        match self {
            TaskData::Node(_) => TaskKind::Node,
            TaskData::Edge(_) => TaskKind::Edge,
            TaskData::Graph(_) => TaskKind::Graph,
        }
    }

    fn hypergraph(&self) -> &Hypergraph {
        match self {
            TaskData::Node(t) => &t.hypergraph,
            TaskData::Edge(t) => &t.hypergraph,
            TaskData::Graph(t) => &t.hypergraph,
        }
    }

    fn features(&self) -> &Arc<Tensor> {
        match self {
            TaskData::Node(t) => &t.features,
            TaskData::Edge(t) => &t.features,
            TaskData::Graph(t) => &t.features,
        }
    }

    fn head(&self) -> Head {
        match self {
            TaskData::Node(t) => Head::Node { classes: t.num_classes },
            TaskData::Edge(_) => Head::Edge,
            TaskData::Graph(t) => Head::Graph { classes: t.num_classes },
        }
    }

    fn validate(&self) -> Result<(), ModelError> {
        let hg = self.hypergraph();
        if self.features().rows() != hg.num_nodes() {
            return Err(ModelError::Task(format!(
                "{} feature rows for {} nodes",
                self.features().rows(),
                hg.num_nodes()
            )));
        }
        let nonempty = |name: &str, idx: &[usize]| {
            if idx.is_empty() {
                Err(ModelError::Task(format!("{name} split is empty")))
            } else {
                Ok(())
            }
        };
        match self {
            TaskData::Node(t) => {
                nonempty("train", &t.train)?;
                nonempty("val", &t.val)?;
                if t.labels.len() != hg.num_nodes() {
                    return Err(ModelError::Task("label count differs from node count".into()));
                }
            }
            TaskData::Edge(t) => {
                if t.train.is_empty() || t.val.is_empty() || t.test.is_empty() {
                    return Err(ModelError::Task("edge task needs train, val and test sets".into()));
                }
            }
            TaskData::Graph(t) => {
                nonempty("train", &t.train)?;
                nonempty("val", &t.val)?;
                if t.labels.len() != t.segments.len() {
                    return Err(ModelError::Task("label count differs from graph count".into()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub loss: f64,
    pub val_metric: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainTiming {
    /// From the start of preparation to the end of the best epoch.
    pub wall_time_to_best_s: f64,
    pub total_wall_time_s: f64,
    pub epochs_run: usize,
    /// Sparse products executed inside the epoch loop.
    pub loop_sparse_products: u64,
}

/// A model restored to its best validation epoch.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: Model,
    /// 1-based; 0 means no epoch improved on the initial parameters.
    pub best_epoch: usize,
    pub best_val: f64,
    pub trace: Vec<EpochStats>,
    pub timing: TrainTiming,
    pub structure: Arc<Structure>,
}

impl TrainedModel {
    pub fn config(&self) -> &ModelConfig {
        &self.model.config
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalSplit {
    Val,
    Test,
}

/// Full-batch training with Adam and checkpoint-on-improve model selection.
pub fn train_model(
    config: &ModelConfig,
    task: &TaskData,
    seed: u64,
    budget: &Budget,
) -> Result<TrainedModel, ModelError> {
    let start = Instant::now();
    task.validate()?;
    let features = task.features();
    let structure = Arc::new(Structure::prepare(config, task.hypergraph(), features));
    let input = Arc::clone(structure.input(features));
    let mut model = Model::new(config.clone(), task.head(), input.cols(), seed)?;
    let mut opt = Adam::new(AdamConfig::new(budget.lr, budget.weight_decay));
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9E37_79B9_7F4A_7C15);

    let mut best_params = model.params.clone();
    let mut best_val = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut time_to_best = start.elapsed().as_secs_f64();
    let mut trace = Vec::new();
    let mut since_best = 0;

    let rows = match task {
        TaskData::Node(t) if row_wise(&structure) => Some(NodeRows::new(&input, t)),
        _ => None,
    };

    let products_before = sparse_product_count();
    for epoch in 1..=budget.epochs {
        let mut tape = Tape::new();
        let bound = model.bind(&mut tape, true);
        let x = tape.constant_shared(rows.as_ref().map_or(&input, |r| &r.train_x));
        let emb = model.embed(&mut tape, &bound, &structure, x, true, &mut rng)?;
        let loss = match task {
            TaskData::Node(t) => {
                let logits = model.node_logits(&mut tape, &bound, emb, true, &mut rng)?;
                match &rows {
                    Some(r) => tape.cross_entropy(logits, &r.train_labels, &r.train_index)?,
                    None => tape.cross_entropy(logits, &t.labels, &t.train)?,
                }
            }
            TaskData::Edge(t) => {
                let negatives = sample_mixed(&t.sampler, &t.known, t.train.len(), &mut rng);
                let mut cands = t.train.as_ref().clone();
                cands.extend(negatives);
                let targets: Vec<f64> =
                    (0..cands.len()).map(|i| if i < t.train.len() { 1.0 } else { 0.0 }).collect();
                let logits = model.candidate_logits(&mut tape, &bound, emb, &Arc::new(cands))?;
                tape.binary_logistic(logits, &targets)?
            }
            TaskData::Graph(t) => {
                let logits = model.graph_logits(&mut tape, &bound, emb, &t.segments, true, &mut rng)?;
                tape.cross_entropy(logits, &t.labels, &t.train)?
            }
        };
        let loss_value = tape.value(loss).item().expect("scalar loss");
        if !loss_value.is_finite() {
            trace.push(EpochStats { epoch, loss: loss_value, val_metric: f64::NAN });
            return Err(ModelError::Diverged { epoch, loss: loss_value, trace });
        }
        let grads = tape.backward(loss)?;
        opt.step(&mut model.params, &grads);
        drop(grads);

        let val = match &rows {
            Some(r) => {
                let pred = node_predictions(&model, &structure, &r.val_x)?;
                metrics::accuracy(&pred, &r.val_labels).unwrap_or(f64::NAN)
            }
            None => validation_metric(&model, &structure, &input, task)?,
        };
        trace.push(EpochStats { epoch, loss: loss_value, val_metric: val });
        if memory_cap_exceeded() {
            return Err(ModelError::OutOfMemory { epoch, cap: memory_cap().unwrap_or(0) });
        }
        if val > best_val {
            best_val = val;
            best_epoch = epoch;
            best_params = model.params.clone();
            time_to_best = start.elapsed().as_secs_f64();
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= budget.patience {
                break;
            }
        }
    }
    let loop_sparse_products = sparse_product_count() - products_before;
    model.params = best_params;
    let total = start.elapsed().as_secs_f64();
    Ok(TrainedModel {
        model,
        best_epoch,
        best_val,
        timing: TrainTiming {
            wall_time_to_best_s: time_to_best.min(total),
            total_wall_time_s: total,
            epochs_run: trace.len(),
            loop_sparse_products,
        },
        trace,
        structure,
    })
}

/// Models without message passing in the loop treat nodes independently.
fn row_wise(structure: &Structure) -> bool {
    matches!(structure, Structure::Features | Structure::Precomputed(_))
}

/// Training and validation rows cut out once, so that row-wise models do
/// no work on nodes the loss and the validation metric never read.
struct NodeRows {
    train_x: Arc<Tensor>,
    train_labels: Vec<usize>,
    train_index: Vec<usize>,
    val_x: Arc<Tensor>,
    val_labels: Vec<usize>,
}

impl NodeRows {
    fn new(input: &Tensor, t: &NodeTask) -> NodeRows {
        NodeRows {
            train_x: Arc::new(input.select_rows(&t.train)),
            train_labels: pick(&t.labels, &t.train),
            train_index: (0..t.train.len()).collect(),
            val_x: Arc::new(input.select_rows(&t.val)),
            val_labels: pick(&t.labels, &t.val),
        }
    }
}

fn embed_eval(
    model: &Model,
    structure: &Structure,
    input: &Arc<Tensor>,
) -> Result<(Tape, super::model::Bound, crate::tensor::Var), ModelError> {
    let mut tape = Tape::new();
    let bound = model.bind(&mut tape, false);
    let x = tape.constant_shared(input);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let emb = model.embed(&mut tape, &bound, structure, x, false, &mut rng)?;
    Ok((tape, bound, emb))
}

fn node_predictions(
    model: &Model,
    structure: &Structure,
    input: &Arc<Tensor>,
) -> Result<Vec<usize>, ModelError> {
    let (mut tape, bound, emb) = embed_eval(model, structure, input)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let logits = model.node_logits(&mut tape, &bound, emb, false, &mut rng)?;
    Ok(tape.value(logits).argmax_rows())
}

fn graph_predictions(
    model: &Model,
    structure: &Structure,
    input: &Arc<Tensor>,
    segments: &Arc<Vec<Vec<usize>>>,
) -> Result<Vec<usize>, ModelError> {
    let (mut tape, bound, emb) = embed_eval(model, structure, input)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let logits = model.graph_logits(&mut tape, &bound, emb, segments, false, &mut rng)?;
    Ok(tape.value(logits).argmax_rows())
}

fn candidate_scores(
    model: &Model,
    structure: &Structure,
    input: &Arc<Tensor>,
    sets: &[CandidateSet],
) -> Result<Vec<Vec<f64>>, ModelError> {
    let (mut tape, bound, emb) = embed_eval(model, structure, input)?;
    sets.iter()
        .map(|set| {
            let cands = Arc::new(set.candidates.clone());
            let logits = model.candidate_logits(&mut tape, &bound, emb, &cands)?;
            Ok(tape.value(logits).as_slice().to_vec())
        })
        .collect()
}

fn pick<T: Copy>(values: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| values[i]).collect()
}

fn ranking_means(sets: &[CandidateSet], scores: &[Vec<f64>]) -> (f64, f64) {
    let mut auc = 0.0;
    let mut ap = 0.0;
    for (set, s) in sets.iter().zip(scores) {
        auc += metrics::auroc(s, &set.labels).unwrap_or(f64::NAN);
        ap += metrics::average_precision(s, &set.labels).unwrap_or(f64::NAN);
    }
    let n = sets.len() as f64;
    (auc / n, ap / n)
}

/// Accuracy for node and graph tasks, mean AUROC over validation variants for
/// hyperedge prediction.
fn validation_metric(
    model: &Model,
    structure: &Structure,
    input: &Arc<Tensor>,
    task: &TaskData,
) -> Result<f64, ModelError> {
    Ok(match task {
        TaskData::Node(t) => {
            let pred = node_predictions(model, structure, input)?;
            metrics::accuracy(&pick(&pred, &t.val), &pick(&t.labels, &t.val)).unwrap_or(f64::NAN)
        }
        TaskData::Graph(t) => {
            let pred = graph_predictions(model, structure, input, &t.segments)?;
            metrics::accuracy(&pick(&pred, &t.val), &pick(&t.labels, &t.val)).unwrap_or(f64::NAN)
        }
        TaskData::Edge(t) => {
            let scores = candidate_scores(model, structure, input, &t.val)?;
            ranking_means(&t.val, &scores).0
        }
    })
}

/// Metrics of a trained model on one split: `acc` and `macro_f1` for
/// classification (plus `delta_dp` and `delta_eo` for binary tasks with a
/// sensitive attribute), `auroc` and `ap` for hyperedge prediction. Fairness
/// gaps that are undefined on the split are left out.
pub fn evaluate(
    trained: &TrainedModel,
    task: &TaskData,
    split: EvalSplit,
) -> Result<BTreeMap<String, f64>, ModelError> {
    let model = &trained.model;
    let structure = &trained.structure;
    let input = Arc::clone(structure.input(task.features()));
    let mut out = BTreeMap::new();
    let choose = |val: &[usize], test: &[usize]| -> Vec<usize> {
        match split {
            EvalSplit::Val => val.to_vec(),
            EvalSplit::Test => test.to_vec(),
        }
    };
    let metric_err = |e: metrics::MetricError| ModelError::Task(e.to_string());
    match task {
        TaskData::Node(t) => {
            let idx = choose(&t.val, &t.test);
            let pred = pick(&node_predictions(model, structure, &input)?, &idx);
            let truth = pick(&t.labels, &idx);
            out.insert("acc".into(), metrics::accuracy(&pred, &truth).map_err(metric_err)?);
            out.insert(
                "macro_f1".into(),
                metrics::macro_f1(&pred, &truth, t.num_classes).map_err(metric_err)?,
            );
            if let (Some(s), 2) = (&t.sensitive, t.num_classes) {
                let s = pick(s, &idx);
                let p: Vec<u8> = pred.iter().map(|&c| c as u8).collect();
                let y: Vec<u8> = truth.iter().map(|&c| c as u8).collect();
                if let Ok(dp) = metrics::demographic_parity(&p, &s) {
                    out.insert("delta_dp".into(), dp);
                }
                if let Ok(eo) = metrics::equalized_odds(&p, &y, &s) {
                    out.insert("delta_eo".into(), eo);
                }
            }
        }
        TaskData::Graph(t) => {
            let idx = choose(&t.val, &t.test);
            let pred = pick(&graph_predictions(model, structure, &input, &t.segments)?, &idx);
            let truth = pick(&t.labels, &idx);
            out.insert("acc".into(), metrics::accuracy(&pred, &truth).map_err(metric_err)?);
            out.insert(
                "macro_f1".into(),
                metrics::macro_f1(&pred, &truth, t.num_classes).map_err(metric_err)?,
            );
        }
        TaskData::Edge(t) => {
            let sets = match split {
                EvalSplit::Val => &t.val,
                EvalSplit::Test => &t.test,
            };
            let scores = candidate_scores(model, structure, &input, sets)?;
            let (auc, ap) = ranking_means(sets, &scores);
            out.insert("auroc".into(), auc);
            out.insert("ap".into(), ap);
        }
    }
    Ok(out)
}
