//! Structural invariants of hypergraphs, propagation operators,
//! perturbations, negative samplers and model equivariance.

use std::collections::HashSet;
use std::sync::Arc;

use super::Check;
use crate::common::{hypergraph, run, tensor, Outcome};
use hgbench_core::data::{build_eval_negatives, cns_sample, mns_sample, sns_sample};
use hgbench_core::hypergraph::{propagation_operator, Hypergraph, Normalization};
use hgbench_core::models::{Activation, Head, Model, ModelConfig, ModelKind, Structure};
use hgbench_core::perturb::{
    corrupt_labels, mask_features, noise_features, perturb_structure, sparsify_supervision, MaskMode,
    PerturbError, StructureMode,
};
use hgbench_core::tensor::{Tape, Tensor};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const CASES: u32 = 200;
const EQUIVARIANCE_CASES: u32 = 50;

fn with_perm(max_nodes: usize, max_edges: usize) -> impl Strategy<Value = (Hypergraph, Vec<usize>)> {
    hypergraph(max_nodes, max_edges).prop_flat_map(|hg| {
        let n = hg.num_nodes();
        (Just(hg), Just((0..n).collect::<Vec<_>>()).prop_shuffle())
    })
}

fn incidences(hg: &Hypergraph) -> usize {
    hg.edges().map(<[usize]>::len).sum()
}

fn rounded(ratio: f64, total: usize) -> usize {
    (ratio * total as f64).round() as usize
}

fn unit() -> std::ops::RangeInclusive<f64> {
    0.0..=1.0
}

pub fn csr_views_agree() -> Outcome {
    run(CASES, with_perm(12, 10), |(hg, perm)| {
        prop_assert!(hg.audit().is_ok());
        prop_assert_eq!(hg.nnz(), incidences(&hg));
        prop_assert_eq!(hg.node_degrees().iter().sum::<usize>(), hg.nnz());
        for e in 0..hg.num_edges() {
            for &v in hg.edge(e) {
                prop_assert!(hg.contains(v, e));
                prop_assert!(hg.incident_edges(v).contains(&e));
            }
        }
        let p = hg.permute_nodes(&perm).unwrap();
        prop_assert!(p.audit().is_ok());
        prop_assert_eq!(p.edge_sizes(), hg.edge_sizes());
        for (v, &pv) in perm.iter().enumerate() {
            prop_assert_eq!(p.node_degrees()[pv], hg.node_degrees()[v]);
        }
        let (u, offsets) = Hypergraph::disjoint_union(&[&hg, &p]);
        prop_assert!(u.audit().is_ok());
        prop_assert_eq!(u.nnz(), 2 * hg.nnz());
        prop_assert_eq!(offsets, vec![0, hg.num_nodes()]);
        Ok(())
    })
}

pub fn symmetric_operator_is_symmetric_and_contractive() -> Outcome {
    run(CASES, (hypergraph(12, 10), unit()), |(hg, alpha)| {
        let op = propagation_operator(&hg, Normalization::Symmetric, alpha);
        let m = &op.matrix;
        let n = hg.num_nodes();
        for u in 0..n {
            for v in 0..n {
                prop_assert_eq!(m.get(u, v).to_bits(), m.get(v, u).to_bits());
            }
        }
        let dense = DMatrix::from_fn(n, n, |r, c| m.get(r, c));
        let radius = dense.symmetric_eigen().eigenvalues.iter().fold(0.0f64, |a, l| a.max(l.abs()));
        prop_assert!(radius <= 1.0 + 1e-8, "spectral radius {radius}");
        Ok(())
    })
}

pub fn row_stochastic_rows_sum_to_one() -> Outcome {
    run(CASES, (hypergraph(12, 10), unit()), |(hg, alpha)| {
        let plain = propagation_operator(&hg, Normalization::RowStochastic, 0.0);
        let mixed = propagation_operator(&hg, Normalization::RowStochastic, alpha);
        let (sums, mixed_sums) = (plain.matrix.row_sums(), mixed.matrix.row_sums());
        for v in 0..hg.num_nodes() {
            if hg.node_degrees()[v] == 0 {
                prop_assert_eq!(plain.matrix.row(v).count(), 0);
                prop_assert!((mixed_sums[v] - alpha).abs() <= 1e-12);
            } else {
                prop_assert!((sums[v] - 1.0).abs() <= 1e-9);
                prop_assert!((mixed_sums[v] - 1.0).abs() <= 1e-9);
            }
            prop_assert!(plain.matrix.row(v).all(|(_, w)| w >= 0.0));
        }
        Ok(())
    })
}

pub fn structure_removal_is_exact() -> Outcome {
    run(CASES, (hypergraph(12, 10), unit(), any::<u64>()), |(hg, ratio, seed)| {
        let out = perturb_structure(&hg, ratio, StructureMode::Remove, seed).unwrap();
        prop_assert!(out.audit().is_ok());
        prop_assert_eq!(out.nnz(), hg.nnz() - rounded(ratio, hg.nnz()));
        let mut remaining: Vec<Vec<usize>> = hg.edge_lists();
        for e in out.edges() {
            let k = remaining.iter().position(|o| e.iter().all(|v| o.contains(v)));
            prop_assert!(k.is_some(), "edge {e:?} is not a subset of a source edge");
            remaining.remove(k.unwrap());
        }
        let same = perturb_structure(&hg, 0.0, StructureMode::Remove, seed).unwrap();
        prop_assert_eq!(same.edge_lists(), hg.edge_lists());
        Ok(())
    })
}

pub fn structure_addition_is_exact() -> Outcome {
    run(CASES, (hypergraph(12, 10), unit(), any::<u64>()), |(hg, ratio, seed)| {
        let k = rounded(ratio, hg.nnz());
        match perturb_structure(&hg, ratio, StructureMode::Add, seed) {
            Ok(out) => {
                prop_assert!(out.audit().is_ok());
                prop_assert_eq!(out.nnz(), hg.nnz() + k);
                prop_assert_eq!(out.num_edges(), hg.num_edges());
                for (old, new) in hg.edges().zip(out.edges()) {
                    prop_assert!(old.iter().all(|v| new.contains(v)));
                }
            }
            Err(PerturbError::Full { wanted, free }) => {
                prop_assert_eq!(wanted, k);
                prop_assert!(free < k);
            }
            Err(e) => prop_assert!(false, "{e}"),
        }
        let same = perturb_structure(&hg, 0.0, StructureMode::Add, seed).unwrap();
        prop_assert_eq!(same.edge_lists(), hg.edge_lists());
        Ok(())
    })
}

pub fn masking_touches_exactly_k() -> Outcome {
    let nonzero = tensor(9, 5).prop_filter("nonzero entries", |x| x.as_slice().iter().all(|&v| v != 0.0));
    run(CASES, (nonzero, unit(), any::<u64>()), |(x, ratio, seed)| {
        let out = mask_features(&x, ratio, MaskMode::Entries, seed).unwrap();
        let mut changed = 0;
        for (a, b) in x.as_slice().iter().zip(out.as_slice()) {
            if a.to_bits() != b.to_bits() {
                prop_assert_eq!(*b, 0.0);
                changed += 1;
            }
        }
        prop_assert_eq!(changed, rounded(ratio, x.len()));

        let out = mask_features(&x, ratio, MaskMode::Rows, seed).unwrap();
        let mut zeroed = 0;
        for r in 0..x.rows() {
            if out.row(r).iter().all(|&v| v == 0.0) {
                zeroed += 1;
            } else {
                prop_assert_eq!(out.row(r), x.row(r));
            }
        }
        prop_assert_eq!(zeroed, rounded(ratio, x.rows()));
        Ok(())
    })
}

pub fn zero_noise_is_identity() -> Outcome {
    run(CASES, (tensor(6, 4), any::<u64>(), 0.0f64..3.0), |(x, seed, level)| {
        prop_assert_eq!(noise_features(&x, 0.0, seed).unwrap(), x.clone());
        let noisy = noise_features(&x, level, seed).unwrap();
        prop_assert_eq!(noisy.shape(), x.shape());
        prop_assert!(noisy.is_finite());
        prop_assert!(noise_features(&x, -0.1, seed).is_err());
        Ok(())
    })
}

pub fn label_flips_are_exact() -> Outcome {
    let train = prop::sample::subsequence((0..30).collect::<Vec<usize>>(), 0..=30);
    run(
        CASES,
        (prop::collection::vec(0usize..4, 30), train, unit(), any::<u64>()),
        |(labels, train, ratio, seed)| {
            let out = corrupt_labels(&labels, &train, ratio, 4, seed).unwrap();
            let changed: Vec<usize> = (0..30).filter(|&i| out[i] != labels[i]).collect();
            prop_assert_eq!(changed.len(), rounded(ratio, train.len()));
            prop_assert!(changed.iter().all(|i| train.contains(i)));
            prop_assert!(out.iter().all(|&c| c < 4));
            prop_assert_eq!(corrupt_labels(&labels, &train, 0.0, 4, seed).unwrap(), labels);
            Ok(())
        },
    )
}

pub fn sparsified_supervision_is_a_subset() -> Outcome {
    let train = prop::sample::subsequence((0..50).collect::<Vec<usize>>(), 0..=50);
    run(CASES, (train, unit(), any::<u64>()), |(train, keep, seed)| {
        let kept = sparsify_supervision(&train, keep, seed).unwrap();
        prop_assert_eq!(kept.len(), rounded(keep, train.len()));
        prop_assert!(kept.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(kept.iter().all(|v| train.contains(v)));
        prop_assert_eq!(sparsify_supervision(&train, 1.0, seed).unwrap(), train);
        Ok(())
    })
}

pub fn ratios_outside_unit_interval_rejected() -> Outcome {
    let bad = prop_oneof![-5.0f64..-1e-9, 1.0f64 + 1e-9..5.0];
    run(CASES, (hypergraph(6, 4), bad), |(hg, bad)| {
        prop_assert!(perturb_structure(&hg, bad, StructureMode::Remove, 0).is_err());
        prop_assert!(sparsify_supervision(&[1, 2, 3], bad, 0).is_err());
        prop_assert!(mask_features(&Tensor::zeros(2, 2), bad, MaskMode::Entries, 0).is_err());
        Ok(())
    })
}

fn known(hg: &Hypergraph) -> HashSet<Vec<usize>> {
    hg.edges().map(<[usize]>::to_vec).collect()
}

/// Hypergraphs with enough free node sets that rejection sampling succeeds.
fn sparse_hypergraph() -> impl Strategy<Value = Hypergraph> {
    (10usize..=24).prop_flat_map(|n| {
        let edge = prop::collection::vec(0..n, 2..=4);
        prop::collection::vec(edge, 2..=8).prop_map(move |edges| Hypergraph::new(&edges, n).unwrap())
    })
}

pub fn samplers_match_positive_shapes() -> Outcome {
    run(CASES, (sparse_hypergraph(), any::<u64>()), |(hg, seed)| {
        let known = known(&hg);
        let sizes: HashSet<usize> = hg.edge_sizes().iter().copied().collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10 {
            let drawn = [sns_sample(&hg, &known, &mut rng), mns_sample(&hg, &known, &mut rng)];
            for c in drawn.into_iter().flatten() {
                prop_assert!(sizes.contains(&c.len()));
                prop_assert!(c.windows(2).all(|w| w[0] < w[1]));
                prop_assert!(!known.contains(&c));
            }
            if let Some(c) = cns_sample(&hg, &known, &mut rng) {
                prop_assert!(!known.contains(&c));
                let near = hg
                    .edges()
                    .any(|e| e.len() == c.len() && e.iter().filter(|v| c.contains(v)).count() == e.len() - 1);
                prop_assert!(near, "{c:?} is not one swap from a hyperedge");
            }
        }
        Ok(())
    })
}

pub fn eval_batches_are_exact() -> Outcome {
    run(CASES, (sparse_hypergraph(), 1usize..30, any::<u64>()), |(hg, n, seed)| {
        let known = known(&hg);
        let batch = build_eval_negatives(&hg, &known, n, seed).unwrap();
        prop_assert_eq!(batch.candidates.len(), n);
        prop_assert_eq!(batch.method_tags.len(), n);
        prop_assert!(batch.candidates.labels.iter().all(|&l| l == 0));
        prop_assert!(batch.candidates.candidates.iter().all(|c| !known.contains(c)));
        prop_assert_eq!(build_eval_negatives(&hg, &known, n, seed).unwrap(), batch);
        Ok(())
    })
}

fn embed(kind: ModelKind, hg: &Hypergraph, x: &Arc<Tensor>) -> Tensor {
    let mut cfg = ModelConfig::new(kind);
    cfg.layers = 2;
    cfg.hidden = 4;
    cfg.dropout = 0.0;
    cfg.activation = Activation::Sigmoid;
    let structure = Structure::prepare(&cfg, hg, x);
    let model = Model::new(cfg, Head::Node { classes: 2 }, x.cols(), 7).unwrap();
    let mut t = Tape::new();
    let bound = model.bind(&mut t, false);
    let input = t.constant_shared(structure.input(x));
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let emb = model.embed(&mut t, &bound, &structure, input, false, &mut rng).unwrap();
    t.value(emb).clone()
}

pub fn embeddings_are_permutation_equivariant() -> Outcome {
    run(EQUIVARIANCE_CASES, (with_perm(10, 8), tensor(10, 3)), |((hg, perm), x)| {
        let n = hg.num_nodes();
        let x = Arc::new(x.select_rows(&(0..n).collect::<Vec<_>>()));
        let mut px = Tensor::zeros(n, x.cols());
        for (v, &pv) in perm.iter().enumerate() {
            px.row_mut(pv).copy_from_slice(x.row(v));
        }
        let (px, phg) = (Arc::new(px), hg.permute_nodes(&perm).unwrap());
        for kind in ModelKind::ALL {
            let a = embed(kind, &hg, &x);
            let b = embed(kind, &phg, &px);
            for (v, &pv) in perm.iter().enumerate() {
                let diff = a.row(v).iter().zip(b.row(pv)).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
                prop_assert!(diff <= 1e-9, "{kind}: node {v} differs by {diff}");
            }
        }
        Ok(())
    })
}

pub const PERTURBATION: &[Check] = &[
    ("structure_removal_is_exact", structure_removal_is_exact),
    ("structure_addition_is_exact", structure_addition_is_exact),
    ("masking_touches_exactly_k", masking_touches_exactly_k),
    ("zero_noise_is_identity", zero_noise_is_identity),
    ("label_flips_are_exact", label_flips_are_exact),
    ("sparsified_supervision_is_a_subset", sparsified_supervision_is_a_subset),
    ("ratios_outside_unit_interval_rejected", ratios_outside_unit_interval_rejected),
];

pub const SAMPLERS: &[Check] = &[
    ("samplers_match_positive_shapes", samplers_match_positive_shapes),
    ("eval_batches_are_exact", eval_batches_are_exact),
];

pub const OPERATOR: &[Check] = &[
    ("csr_views_agree", csr_views_agree),
    ("symmetric_operator_is_symmetric_and_contractive", symmetric_operator_is_symmetric_and_contractive),
    ("row_stochastic_rows_sum_to_one", row_stochastic_rows_sum_to_one),
];

pub const EQUIVARIANCE: &[Check] =
    &[("embeddings_are_permutation_equivariant", embeddings_are_permutation_equivariant)];
