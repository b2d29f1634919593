//! Reverse-mode gradients against central finite differences.

use std::sync::Arc;

use super::Check;
use crate::common::{hypergraph, numeric_grad, rel_err, run, tensor, Outcome};
use hgbench_core::hypergraph::{propagation_operator, Normalization};
use hgbench_core::models::{Activation, Head, Model, ModelConfig, ModelKind, Pooling, Structure};
use hgbench_core::tensor::{Tape, Tensor, Var};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;

fn weights(cols: usize) -> Tensor {
    Tensor::column(&(0..cols).map(|j| 1.1 + (j as f64 * 0.37).sin()).collect::<Vec<_>>())
}

/// Turns any output into a scalar with a row- and column-dependent weighting.
fn scalarize(t: &mut Tape, out: Var) -> Var {
    let (_, c) = t.shape(out);
    let w = t.constant(weights(c));
    let s = t.matmul(out, w).unwrap();
    let s = t.sigmoid(s);
    t.sum_all(s)
}

/// Compares tape gradients of `build` with finite differences for every input.
fn check(inputs: &[Tensor], build: impl Fn(&mut Tape, &[Var]) -> Var) -> Result<(), TestCaseError> {
    let eval = |xs: &[Tensor]| -> f64 {
        let mut t = Tape::new();
        let vars: Vec<Var> = xs.iter().map(|x| t.constant(x.clone())).collect();
        let out = build(&mut t, &vars);
        t.value(out).item().expect("scalar")
    };
    let mut t = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|x| t.leaf(x.clone())).collect();
    let out = build(&mut t, &vars);
    let grads = t.backward(out).unwrap();
    for (i, v) in vars.iter().enumerate() {
        let analytic =
            grads.get(*v).map(|g| g.as_slice().to_vec()).unwrap_or_else(|| vec![0.0; inputs[i].len()]);
        let numeric = numeric_grad(&inputs[i], H, |probe| {
            let mut xs = inputs.to_vec();
            xs[i] = probe.clone();
            eval(&xs)
        });
        let err = rel_err(&analytic, &numeric);
        prop_assert!(err < TOL, "input {i}: rel err {err}\nanalytic {analytic:?}\nnumeric {numeric:?}");
    }
    Ok(())
}

/// Values kept at least `gap` away from zero, so kinks stay out of reach.
fn away_from_zero(rows: usize, cols: usize, gap: f64) -> impl Strategy<Value = Tensor> {
    tensor(rows, cols).prop_map(move |x| x.map(|v| if v.abs() < gap { v.signum() * gap + v } else { v }))
}

/// Distinct values per column, at least 0.05 apart, in random order.
fn distinct(rows: usize, cols: usize) -> impl Strategy<Value = Tensor> {
    prop::collection::vec(Just((0..rows).collect::<Vec<usize>>()).prop_shuffle(), cols).prop_map(
        move |orders| {
            let mut x = Tensor::zeros(rows, cols);
            for (c, order) in orders.iter().enumerate() {
                for (r, &rank) in order.iter().enumerate() {
                    x.set(r, c, rank as f64 * 0.05 - 0.1 * c as f64);
                }
            }
            x
        },
    )
}

const OP_CASES: u32 = 48;
const STACK_CASES: u32 = 12;

pub fn matmul() -> Outcome {
    run(OP_CASES, (tensor(3, 4), tensor(4, 2)), |(a, b)| {
        check(&[a, b], |t, v| {
            let y = t.matmul(v[0], v[1]).unwrap();
            scalarize(t, y)
        })
    })
}

pub fn spmm() -> Outcome {
    run(OP_CASES, (hypergraph(6, 5), 0u64..1000), |(hg, seed)| {
        let p = propagation_operator(&hg, Normalization::Symmetric, 0.2).matrix;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Tensor::from_vec(
            hg.num_nodes(),
            2,
            (0..hg.num_nodes() * 2).map(|_| rand::Rng::random_range(&mut rng, -1.0..1.0)).collect(),
        )
        .unwrap();
        check(&[x], |t, v| {
            let y = t.spmm(&p, v[0]).unwrap();
            scalarize(t, y)
        })
    })
}

pub fn add_and_add_row() -> Outcome {
    run(OP_CASES, (tensor(3, 2), tensor(3, 2), tensor(1, 2)), |(a, b, r)| {
        check(&[a, b, r], |t, v| {
            let s = t.add(v[0], v[1]).unwrap();
            let s = t.add_row(s, v[2]).unwrap();
            scalarize(t, s)
        })
    })
}

pub fn scale_and_sigmoid() -> Outcome {
    run(OP_CASES, (tensor(3, 3), -3.0f64..3.0), |(a, s)| {
        check(&[a], |t, v| {
            let y = t.scale(v[0], s);
            let y = t.sigmoid(y);
            scalarize(t, y)
        })
    })
}

pub fn relu_and_leaky() -> Outcome {
    run(OP_CASES, away_from_zero(4, 3, 1e-3), |a| {
        check(std::slice::from_ref(&a), |t, v| {
            let y = t.relu(v[0]);
            scalarize(t, y)
        })?;
        check(&[a], |t, v| {
            let y = t.leaky_relu(v[0], 0.1);
            scalarize(t, y)
        })
    })
}

pub fn dropout_fixed_mask() -> Outcome {
    run(OP_CASES, (tensor(4, 3), 0u64..1000), |(a, seed)| {
        check(&[a], |t, v| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y = t.dropout(v[0], 0.4, &mut rng, true).unwrap();
            scalarize(t, y)
        })
    })
}

pub fn concat() -> Outcome {
    run(OP_CASES, (tensor(3, 2), tensor(3, 1), tensor(2, 2)), |(a, b, c)| {
        check(&[a.clone(), b], |t, v| {
            let y = t.concat_cols(&[v[0], v[1]]).unwrap();
            scalarize(t, y)
        })?;
        check(&[a, c], |t, v| {
            let y = t.concat_rows(&[v[0], v[1]]).unwrap();
            scalarize(t, y)
        })
    })
}

pub fn gather_and_group_mean() -> Outcome {
    run(OP_CASES, (tensor(5, 2), prop::collection::vec(0usize..5, 1..8)), |(a, idx)| {
        check(std::slice::from_ref(&a), |t, v| {
            let y = t.row_gather(v[0], &idx).unwrap();
            scalarize(t, y)
        })?;
        let groups = Arc::new(vec![idx.clone(), vec![], vec![0, 4]]);
        check(std::slice::from_ref(&a), |t, v| {
            let y = t.group_mean(v[0], &groups).unwrap();
            scalarize(t, y)
        })?;
        check(&[a], |t, v| {
            let y = t.mean_rows(v[0]).unwrap();
            scalarize(t, y)
        })
    })
}

pub fn group_max() -> Outcome {
    run(OP_CASES, distinct(5, 3), |a| {
        let groups = vec![vec![0, 2, 4], vec![1, 3], vec![3]];
        check(std::slice::from_ref(&a), |t, v| {
            let y = t.group_max(v[0], &groups).unwrap();
            scalarize(t, y)
        })?;
        check(&[a], |t, v| {
            let y = t.max_rows(v[0]).unwrap();
            scalarize(t, y)
        })
    })
}

pub fn softmax_pick_and_reductions() -> Outcome {
    run(OP_CASES, tensor(4, 3), |a| {
        check(std::slice::from_ref(&a), |t, v| {
            let y = t.log_softmax_rows(v[0]);
            scalarize(t, y)
        })?;
        check(std::slice::from_ref(&a), |t, v| {
            let p = t.pick(v[0], &[(0, 1), (3, 2), (0, 1)]).unwrap();
            let s = t.sigmoid(p);
            t.mean_all(s)
        })?;
        check(&[a], |t, v| {
            let s = t.sigmoid(v[0]);
            t.sum_all(s)
        })
    })
}

pub fn losses() -> Outcome {
    let labels = (prop::collection::vec(0usize..3, 4), prop::collection::vec(0u8..2, 5));
    run(OP_CASES, (tensor(4, 3), tensor(5, 1), labels), |(a, s, (y, z))| {
        check(&[a], |t, v| t.cross_entropy(v[0], &y, &[0, 2, 3]).unwrap())?;
        let targets: Vec<f64> = z.iter().map(|&b| f64::from(b)).collect();
        check(&[s], |t, v| t.binary_logistic(v[0], &targets).unwrap())
    })
}

/// Loss of a model on a fixed task, and its parameter gradients.
fn model_loss(model: &Model, structure: &Structure, x: &Arc<Tensor>, task: &Task) -> (f64, Vec<Vec<f64>>) {
    let mut t = Tape::new();
    let bound = model.bind(&mut t, true);
    let input = t.constant_shared(structure.input(x));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let emb = model.embed(&mut t, &bound, structure, input, false, &mut rng).unwrap();
    let loss = match task {
        Task::Node(labels) => {
            let logits = model.node_logits(&mut t, &bound, emb, false, &mut rng).unwrap();
            let mask: Vec<usize> = (0..labels.len()).collect();
            t.cross_entropy(logits, labels, &mask).unwrap()
        }
        Task::Edge(cands, targets) => {
            let logits = model.candidate_logits(&mut t, &bound, emb, cands).unwrap();
            t.binary_logistic(logits, targets).unwrap()
        }
        Task::Graph(segments, labels) => {
            let logits = model.graph_logits(&mut t, &bound, emb, segments, false, &mut rng).unwrap();
            let mask: Vec<usize> = (0..labels.len()).collect();
            t.cross_entropy(logits, labels, &mask).unwrap()
        }
    };
    let value = t.value(loss).item().unwrap();
    let grads = t.backward(loss).unwrap();
    let per_param = model
        .params
        .ids()
        .map(|id| {
            grads
                .param(id)
                .map(|g| g.as_slice().to_vec())
                .unwrap_or_else(|| vec![0.0; model.params.get(id).len()])
        })
        .collect();
    (value, per_param)
}

enum Task {
    Node(Vec<usize>),
    Edge(Arc<Vec<Vec<usize>>>, Vec<f64>),
    Graph(Arc<Vec<Vec<usize>>>, Vec<usize>),
}

fn check_model(
    kind: ModelKind,
    act: Activation,
    hg: &hgbench_core::hypergraph::Hypergraph,
    x: Tensor,
    task: Task,
    head: Head,
    seed: u64,
) -> Result<(), TestCaseError> {
    let mut cfg = ModelConfig::new(kind);
    cfg.layers = 2;
    cfg.hidden = 3;
    cfg.dropout = 0.0;
    cfg.activation = act;
    cfg.edge_pooling = Pooling::Mean;
    cfg.graph_pooling = Pooling::Mean;
    if kind == ModelKind::Hnhn {
        cfg.alpha = -0.5;
        cfg.beta = 0.5;
    }
    let x = Arc::new(x);
    let structure = Structure::prepare(&cfg, hg, &x);
    let model = Model::new(cfg, head, x.cols(), seed).unwrap();
    let (_, analytic) = model_loss(&model, &structure, &x, &task);
    let ids: Vec<_> = model.params.ids().collect();
    for (k, id) in ids.iter().enumerate() {
        let numeric = numeric_grad(model.params.get(*id), H, |probe| {
            let mut m = model.clone();
            *m.params.get_mut(*id) = probe.clone();
            model_loss(&m, &structure, &x, &task).0
        });
        let err = rel_err(&analytic[k], &numeric);
        prop_assert!(
            err < TOL,
            "{kind} {act:?} param {}: rel err {err} {:?} {:?}",
            model.params.name(*id),
            analytic[k],
            numeric
        );
    }
    Ok(())
}

fn acts() -> impl Strategy<Value = Activation> {
    prop_oneof![Just(Activation::Sigmoid), Just(Activation::Linear)]
}

pub fn node_stacks() -> Outcome {
    run(STACK_CASES, (hypergraph(6, 5), acts(), 0u64..1000, tensor(6, 3)), |(hg, act, seed, xs)| {
        let n = hg.num_nodes();
        let x = Tensor::from_vec(n, 3, xs.as_slice()[..n * 3].to_vec()).unwrap();
        let labels: Vec<usize> = (0..n).map(|v| (v + seed as usize) % 3).collect();
        for kind in ModelKind::ALL {
            check_model(
                kind,
                act,
                &hg,
                x.clone(),
                Task::Node(labels.clone()),
                Head::Node { classes: 3 },
                seed,
            )?;
        }
        Ok(())
    })
}

pub fn edge_and_graph_stacks() -> Outcome {
    run(STACK_CASES, (hypergraph(6, 5), acts(), 0u64..1000, tensor(6, 2)), |(hg, act, seed, xs)| {
        let n = hg.num_nodes();
        let x = Tensor::from_vec(n, 2, xs.as_slice()[..n * 2].to_vec()).unwrap();
        let cands = Arc::new(vec![vec![0, 1], vec![1], (0..n).collect()]);
        let segments = Arc::new(vec![vec![0], (1..n).collect()]);
        for kind in ModelKind::ALL {
            check_model(
                kind,
                act,
                &hg,
                x.clone(),
                Task::Edge(Arc::clone(&cands), vec![1.0, 0.0, 1.0]),
                Head::Edge,
                seed,
            )?;
            check_model(
                kind,
                act,
                &hg,
                x.clone(),
                Task::Graph(Arc::clone(&segments), vec![0, 1]),
                Head::Graph { classes: 2 },
                seed,
            )?;
        }
        Ok(())
    })
}

pub const CHECKS: &[Check] = &[
    ("matmul", matmul),
    ("spmm", spmm),
    ("add_and_add_row", add_and_add_row),
    ("scale_and_sigmoid", scale_and_sigmoid),
    ("relu_and_leaky", relu_and_leaky),
    ("dropout_fixed_mask", dropout_fixed_mask),
    ("concat", concat),
    ("gather_and_group_mean", gather_and_group_mean),
    ("group_max", group_max),
    ("softmax_pick_and_reductions", softmax_pick_and_reductions),
    ("losses", losses),
    ("node_stacks", node_stacks),
    ("edge_and_graph_stacks", edge_and_graph_stacks),
];
