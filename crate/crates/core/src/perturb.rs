//! Seeded random perturbations of structure, features and supervision.
//!
//! Every operator changes an exact number of items, `round(ratio · total)`,
//! and returns a new value; inputs are never modified. A ratio of zero is the
//! identity.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hypergraph::Hypergraph;
use crate::tensor::Tensor;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerturbError {
    #[error("ratio {0} outside [0, 1]")]
    Ratio(f64),
    #[error("cannot add {wanted} incidences: only {free} are absent")]
    Full { wanted: usize, free: usize },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbTarget {
    StructureRemove,
    StructureAdd,
    FeatureMask,
    FeatureNoise,
    LabelNoise,
    LabelSparsify,
}

impl PerturbTarget {
    pub fn name(self) -> &'static str {
        match self {
            PerturbTarget::StructureRemove => "structure_remove",
            PerturbTarget::StructureAdd => "structure_add",
            PerturbTarget::FeatureMask => "feature_mask",
            PerturbTarget::FeatureNoise => "feature_noise",
            PerturbTarget::LabelNoise => "label_noise",
            PerturbTarget::LabelSparsify => "label_sparsify",
        }
    }
}

/// One perturbation. For `label_sparsify` the ratio is the share of
/// training labels hidden; for `feature_noise` it is the noise level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbSpec {
    pub target: PerturbTarget,
    pub ratio: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureMode {
    Remove,
    Add,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaskMode {
    /// Individual matrix entries.
    #[default]
    Entries,
    /// Whole node rows.
    Rows,
}

fn check_ratio(ratio: f64) -> Result<(), PerturbError> {
    if (0.0..=1.0).contains(&ratio) {
        Ok(())
    } else {
        Err(PerturbError::Ratio(ratio))
    }
}

fn count(ratio: f64, total: usize) -> usize {
    ((ratio * total as f64).round() as usize).min(total)
}

/// Removes or adds `round(ratio · nnz)` node–hyperedge incidences chosen
/// uniformly. Hyperedges emptied by removal are dropped.
pub fn perturb_structure(
    hg: &Hypergraph,
    ratio: f64,
    mode: StructureMode,
    seed: u64,
) -> Result<Hypergraph, PerturbError> {
    check_ratio(ratio)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nnz = hg.nnz();
    let k = count(ratio, nnz);
    let n = hg.num_nodes();
    let mut edges = hg.edge_lists();
    match mode {
        StructureMode::Remove => {
            let mut drop = vec![false; nnz];
            for i in index::sample(&mut rng, nnz, k) {
                drop[i] = true;
            }
            let mut pos = 0;
            for e in &mut edges {
                e.retain(|_| {
                    let keep = !drop[pos];
                    pos += 1;
                    keep
                });
            }
            edges.retain(|e| !e.is_empty());
        }
        StructureMode::Add => {
            let free_per_edge: Vec<usize> = edges.iter().map(|e| n - e.len()).collect();
            let free: usize = free_per_edge.iter().sum();
            if k > free {
                return Err(PerturbError::Full { wanted: k, free });
            }
            let mut prefix = Vec::with_capacity(edges.len() + 1);
            prefix.push(0);
            for f in &free_per_edge {
                prefix.push(prefix.last().unwrap() + f);
            }
            let mut picks = index::sample(&mut rng, free, k).into_vec();
            picks.sort_unstable();
            let mut added: Vec<Vec<usize>> = vec![Vec::new(); edges.len()];
            for p in picks {
                let e = prefix.partition_point(|&s| s <= p) - 1;
                added[e].push(nth_absent(&edges[e], p - prefix[e]));
            }
            for (e, extra) in edges.iter_mut().zip(added) {
                e.extend(extra);
            }
        }
    }
    Ok(Hypergraph::new(&edges, n).expect("perturbed edges stay valid"))
}

/// The `j`-th node id (ascending) that is not in the sorted list `members`.
fn nth_absent(members: &[usize], j: usize) -> usize {
    let mut v = j;
    for &m in members {
        if m <= v {
            v += 1;
        } else {
            break;
        }
    }
    v
}

/// Zeroes `round(ratio · numel)` uniformly chosen entries, or with
/// [`MaskMode::Rows`] `round(ratio · rows)` whole rows.
pub fn mask_features(x: &Tensor, ratio: f64, mode: MaskMode, seed: u64) -> Result<Tensor, PerturbError> {
    check_ratio(ratio)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = x.clone();
    match mode {
        MaskMode::Entries => {
            let k = count(ratio, x.len());
            let data = out.as_mut_slice();
            for i in index::sample(&mut rng, x.len(), k) {
                data[i] = 0.0;
            }
        }
        MaskMode::Rows => {
            let k = count(ratio, x.rows());
            for r in index::sample(&mut rng, x.rows(), k) {
                out.row_mut(r).fill(0.0);
            }
        }
    }
    Ok(out)
}

/// `X + level · ε ⊙ σ_col` with standard normal `ε` and per-column
/// (population) standard deviation `σ_col`. Constant columns use the mean
/// of all column deviations.
pub fn noise_features(x: &Tensor, level: f64, seed: u64) -> Result<Tensor, PerturbError> {
    if !(level >= 0.0 && level.is_finite()) {
        return Err(PerturbError::Invalid(format!("noise level {level}")));
    }
    let (n, f) = x.shape();
    if level == 0.0 || n == 0 {
        return Ok(x.clone());
    }
    let sigma: Vec<f64> = (0..f)
        .map(|c| {
            let mean = (0..n).map(|r| x.get(r, c)).sum::<f64>() / n as f64;
            ((0..n).map(|r| (x.get(r, c) - mean).powi(2)).sum::<f64>() / n as f64).sqrt()
        })
        .collect();
    let global = sigma.iter().sum::<f64>() / f.max(1) as f64;
    let sigma: Vec<f64> = sigma.into_iter().map(|s| if s > 0.0 { s } else { global }).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = x.clone();
    for r in 0..n {
        for (v, s) in out.row_mut(r).iter_mut().zip(&sigma) {
            let eps: f64 = StandardNormal.sample(&mut rng);
            *v += level * eps * s;
        }
    }
    Ok(out)
}

/// Gives `round(ratio · |train|)` uniformly chosen training nodes a label
/// drawn uniformly from the other `classes - 1` classes.
pub fn corrupt_labels(
    labels: &[usize],
    train: &[usize],
    ratio: f64,
    classes: usize,
    seed: u64,
) -> Result<Vec<usize>, PerturbError> {
    check_ratio(ratio)?;
    if classes < 2 {
        return Err(PerturbError::Invalid("label noise needs two classes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = labels.to_vec();
    for i in index::sample(&mut rng, train.len(), count(ratio, train.len())) {
        let node = train[i];
        let shift = rng.random_range(1..classes);
        out[node] = (labels[node] + shift) % classes;
    }
    Ok(out)
}

/// Keeps `round(keep · |train|)` uniformly chosen training indices, in their
/// original order.
pub fn sparsify_supervision(train: &[usize], keep: f64, seed: u64) -> Result<Vec<usize>, PerturbError> {
    check_ratio(keep)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = index::sample(&mut rng, train.len(), count(keep, train.len())).into_vec();
    chosen.sort_unstable();
    Ok(chosen.into_iter().map(|i| train[i]).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ten_pairs() -> Hypergraph {
        Hypergraph::new(&[vec![0, 1, 2], vec![2, 3], vec![0, 3, 4, 5], vec![1]], 6).unwrap()
    }

    #[test]
    fn remove_exact() {
        let hg = ten_pairs();
        assert_eq!(hg.nnz(), 10);
        let p = perturb_structure(&hg, 0.3, StructureMode::Remove, 1).unwrap();
        assert_eq!(p.nnz(), 7);
        p.audit().unwrap();
        assert_eq!(perturb_structure(&hg, 0.0, StructureMode::Remove, 1).unwrap(), hg);
    }

    #[test]
    fn add_exact_and_full() {
        let hg = ten_pairs();
        let p = perturb_structure(&hg, 0.5, StructureMode::Add, 2).unwrap();
        assert_eq!(p.nnz(), 15);
        assert_eq!(p.num_edges(), hg.num_edges());
        for e in 0..hg.num_edges() {
            assert!(hg.edge(e).iter().all(|v| p.edge(e).contains(v)));
        }
        let full = Hypergraph::new(&[vec![0, 1]], 2).unwrap();
        assert!(matches!(
            perturb_structure(&full, 0.5, StructureMode::Add, 0),
            Err(PerturbError::Full { .. })
        ));
    }

    #[test]
    fn nth_absent_skips_members() {
        assert_eq!(nth_absent(&[0, 1, 3], 0), 2);
        assert_eq!(nth_absent(&[0, 1, 3], 1), 4);
        assert_eq!(nth_absent(&[], 5), 5);
    }

    #[test]
    fn mask_counts() {
        let x = Tensor::filled(4, 5, 1.5);
        let m = mask_features(&x, 0.5, MaskMode::Entries, 3).unwrap();
        assert_eq!(m.as_slice().iter().filter(|&&v| v == 0.0).count(), 10);
        assert!(m.as_slice().iter().all(|&v| v == 0.0 || v == 1.5));
        let r = mask_features(&x, 0.5, MaskMode::Rows, 3).unwrap();
        assert_eq!((0..4).filter(|&i| r.row(i).iter().all(|&v| v == 0.0)).count(), 2);
        assert_eq!(mask_features(&x, 0.0, MaskMode::Entries, 3).unwrap(), x);
    }

    #[test]
    fn label_counts() {
        let labels: Vec<usize> = (0..200).map(|i| i % 4).collect();
        let train: Vec<usize> = (0..100).collect();
        let y = corrupt_labels(&labels, &train, 0.15, 4, 5).unwrap();
        let flipped: Vec<usize> = (0..200).filter(|&i| y[i] != labels[i]).collect();
        assert_eq!(flipped.len(), 15);
        assert!(flipped.iter().all(|&i| i < 100));
        assert_eq!(corrupt_labels(&labels, &train, 0.0, 4, 5).unwrap(), labels);
    }

    #[test]
    fn sparsify_counts() {
        let train: Vec<usize> = (0..1354).map(|i| 2 * i).collect();
        let kept = sparsify_supervision(&train, 0.1, 0).unwrap();
        assert_eq!(kept.len(), 135);
        assert!(kept.iter().all(|k| train.contains(k)));
        assert_eq!(sparsify_supervision(&train, 1.0, 0).unwrap(), train);
    }

    #[test]
    fn noise_zero_identity() {
        let x = Tensor::from_rows(&[vec![1.0, 2.0], vec![3.0, 2.0]]);
        assert_eq!(noise_features(&x, 0.0, 1).unwrap(), x);
        let y = noise_features(&x, 1.0, 1).unwrap();
        assert_eq!(y, noise_features(&x, 1.0, 1).unwrap());
        assert_ne!(y, x);
    }
}
