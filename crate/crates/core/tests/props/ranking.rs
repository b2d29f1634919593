//! Ranking and fairness metrics against brute-force oracles.

use super::Check;
use crate::common::{run, Outcome};
use hgbench_core::metrics::{
    accuracy, auroc, average_precision, demographic_parity, equalized_odds, macro_f1,
};
use num_rational::Ratio;
use proptest::prelude::*;

type Q = Ratio<i128>;

/// Scores drawn from a handful of levels so ties are common, with at least
/// one positive and one negative label.
fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
    (2usize..=50)
        .prop_flat_map(|n| {
            (
                prop::collection::vec((0u8..6).prop_map(|k| f64::from(k) * 0.25), n),
                prop::collection::vec(0u8..2, n),
                0..n,
                0..n,
            )
        })
        .prop_filter_map("needs two classes", |(s, mut y, a, b)| {
            if a == b {
                return None;
            }
            y[a] = 1;
            y[b] = 0;
            Some((s, y))
        })
}

/// All positive-negative pairs: concordant counts 2, tied counts 1.
fn auroc_pairs(s: &[f64], y: &[u8]) -> f64 {
    let (mut twice, mut pairs) = (0u64, 0u64);
    for i in (0..s.len()).filter(|&i| y[i] == 1) {
        for j in (0..s.len()).filter(|&j| y[j] == 0) {
            pairs += 1;
            twice += match s[i].partial_cmp(&s[j]).unwrap() {
                std::cmp::Ordering::Greater => 2,
                std::cmp::Ordering::Equal => 1,
                std::cmp::Ordering::Less => 0,
            };
        }
    }
    twice as f64 / (2 * pairs) as f64
}

/// Position of item `i` when sorted by descending score, ties by index.
fn rank(s: &[f64], i: usize) -> usize {
    1 + (0..s.len()).filter(|&j| s[j] > s[i] || (s[j] == s[i] && j < i)).count()
}

/// `Σ_k (R_k − R_{k−1}) · P_k` over every prefix, in exact arithmetic.
fn ap_prefix_scan(s: &[f64], y: &[u8]) -> Q {
    let n = s.len();
    let total_pos = y.iter().filter(|&&l| l == 1).count() as i128;
    let mut by_rank = vec![0usize; n];
    for i in 0..n {
        by_rank[rank(s, i) - 1] = i;
    }
    let mut ap = Q::from_integer(0);
    let mut prev_recall = Q::from_integer(0);
    let mut hits = 0i128;
    for (k, &i) in by_rank.iter().enumerate() {
        hits += i128::from(y[i]);
        let recall = Q::new(hits, total_pos);
        let precision = Q::new(hits, k as i128 + 1);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    ap
}

/// For each positive, the share of positives ranked at or above it divided by
/// its rank; summed in rank order and averaged.
fn ap_per_positive(s: &[f64], y: &[u8]) -> (f64, Q) {
    let mut positives: Vec<(usize, usize)> =
        (0..s.len()).filter(|&i| y[i] == 1).map(|i| (rank(s, i), i)).collect();
    positives.sort_unstable();
    let (mut float, mut exact) = (0.0, Q::from_integer(0));
    for (r, _) in &positives {
        let above = positives.iter().filter(|(r2, _)| r2 <= r).count();
        float += above as f64 / *r as f64;
        exact += Q::new(above as i128, *r as i128);
    }
    let p = positives.len();
    (float / p as f64, exact / Q::from_integer(p as i128))
}

fn q_to_f64(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

pub fn auroc_matches_pair_count() -> Outcome {
    run(1000, instance(), |(s, y)| {
        prop_assert_eq!(auroc(&s, &y).unwrap().to_bits(), auroc_pairs(&s, &y).to_bits());
        Ok(())
    })
}

pub fn ap_matches_prefix_scan() -> Outcome {
    run(1000, instance(), |(s, y)| {
        let got = average_precision(&s, &y).unwrap();
        let scan = ap_prefix_scan(&s, &y);
        let (float, exact) = ap_per_positive(&s, &y);
        prop_assert_eq!(exact, scan);
        prop_assert_eq!(got.to_bits(), float.to_bits());
        prop_assert!((got - q_to_f64(scan)).abs() <= 1e-14);
        Ok(())
    })
}

fn groups() -> impl Strategy<Value = (Vec<u8>, Vec<u8>, Vec<u8>)> {
    (4usize..40).prop_flat_map(|n| {
        (prop::collection::vec(0u8..2, n), prop::collection::vec(0u8..2, n), prop::collection::vec(0u8..2, n))
    })
}

pub fn fairness_symmetric_and_bounded() -> Outcome {
    run(300, groups(), |(pred, truth, s)| {
        let flipped: Vec<u8> = s.iter().map(|g| 1 - g).collect();
        if let Ok(dp) = demographic_parity(&pred, &s) {
            prop_assert!((0.0..=1.0).contains(&dp));
            prop_assert_eq!(dp, demographic_parity(&pred, &flipped).unwrap());
        }
        if let Ok(eo) = equalized_odds(&pred, &truth, &s) {
            prop_assert!((0.0..=1.0).contains(&eo));
            prop_assert_eq!(eo, equalized_odds(&pred, &truth, &flipped).unwrap());
        }
        Ok(())
    })
}

pub fn accuracy_plus_error_is_one() -> Outcome {
    run(300, (prop::collection::vec(0usize..4, 1..60), 0usize..4), |(pred, shift)| {
        let truth: Vec<usize> =
            pred.iter().enumerate().map(|(i, &p)| if i % 3 == 0 { (p + shift) % 4 } else { p }).collect();
        let acc = accuracy(&pred, &truth).unwrap();
        let wrong = pred.iter().zip(&truth).filter(|(a, b)| a != b).count() as f64 / pred.len() as f64;
        prop_assert!((acc + wrong - 1.0).abs() < 1e-15);
        Ok(())
    })
}

pub fn macro_f1_relabel_invariant() -> Outcome {
    let perm = Just(vec![0usize, 1, 2]).prop_shuffle();
    run(
        300,
        (prop::collection::vec(0usize..3, 1..40), prop::collection::vec(0usize..3, 40), perm),
        |(pred, truth_seed, perm)| {
            let truth = &truth_seed[..pred.len()];
            let a = macro_f1(&pred, truth, 3).unwrap();
            let p2: Vec<usize> = pred.iter().map(|&c| perm[c]).collect();
            let t2: Vec<usize> = truth.iter().map(|&c| perm[c]).collect();
            let b = macro_f1(&p2, &t2, 3).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
            Ok(())
        },
    )
}

pub const RANKING: &[Check] = &[
    ("auroc_matches_pair_count", auroc_matches_pair_count),
    ("ap_matches_prefix_scan", ap_matches_prefix_scan),
];

pub const CLASSIFICATION: &[Check] = &[
    ("fairness_symmetric_and_bounded", fairness_symmetric_and_bounded),
    ("accuracy_plus_error_is_one", accuracy_plus_error_is_one),
    ("macro_f1_relabel_invariant", macro_f1_relabel_invariant),
];
