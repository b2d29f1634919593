#![allow(dead_code)]

use hgbench_core::hypergraph::Hypergraph;
use hgbench_core::tensor::Tensor;
use proptest::prelude::*;
use proptest::test_runner::{TestCaseError, TestRunner};

/// Random hypergraph on `2..=max_nodes` nodes with `1..=max_edges` edges of
/// size `1..=4`.
pub fn hypergraph(max_nodes: usize, max_edges: usize) -> impl Strategy<Value = Hypergraph> {
    (2..=max_nodes).prop_flat_map(move |n| {
        let edge = prop::collection::vec(0..n, 1..=4.min(n));
        prop::collection::vec(edge, 1..=max_edges)
            .prop_map(move |edges| Hypergraph::new(&edges, n).expect("ids in range"))
    })
}

pub fn tensor(rows: usize, cols: usize) -> impl Strategy<Value = Tensor> {
    prop::collection::vec(-2.0f64..2.0, rows * cols)
        .prop_map(move |v| Tensor::from_vec(rows, cols, v).expect("shape"))
}

/// `‖a − b‖ / max(‖a‖, ‖b‖, 1e-6)`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let norm = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm(&diff) / norm(a).max(norm(b)).max(1e-6)
}

/// Fourth-order central differences of `f` at `x`.
pub fn numeric_grad(x: &Tensor, h: f64, mut f: impl FnMut(&Tensor) -> f64) -> Vec<f64> {
    let mut probe = x.clone();
    (0..x.len())
        .map(|i| {
            let orig = probe.as_slice()[i];
            let mut at = |d: f64| {
                probe.as_mut_slice()[i] = orig + d;
                f(&probe)
            };
            let g = (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h);
            probe.as_mut_slice()[i] = orig;
            g
        })
        .collect()
}

/// Property-test settings with a fixed seed, so every run explores the same
/// cases.
pub fn cases(n: u32) -> ProptestConfig {
    ProptestConfig {
        cases: n,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x6867_6265_6e63),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

/// Result of one property check; the error names the minimal failing case.
pub type Outcome = Result<(), String>;

/// Runs `test` on `n` cases drawn from `strategy` with the fixed seed.
pub fn run<S>(n: u32, strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Outcome
where
    S: Strategy,
    S::Value: std::fmt::Debug,
{
    TestRunner::new(cases(n)).run(&strategy, test).map_err(|e| e.to_string())
}
