//! Task metrics, group-fairness gaps, run profiling and seed aggregation.

mod aggregate;
mod fairness;
mod profile;
mod ranking;

pub use aggregate::{aggregate, MetricReport};
pub use fairness::{demographic_parity, equalized_odds};
pub use profile::{profile, RunProfile};
pub use ranking::{auroc, average_precision};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricError {
    #[error("{what}: {left} vs {right} entries")]
    LengthMismatch { what: &'static str, left: usize, right: usize },
    #[error("{0} is undefined for this input")]
    Undefined(&'static str),
    #[error("empty input")]
    Empty,
}

pub(crate) fn same_len(what: &'static str, left: usize, right: usize) -> Result<(), MetricError> {
    if left != right {
        return Err(MetricError::LengthMismatch { what, left, right });
    }
    if left == 0 {
        return Err(MetricError::Empty);
    }
    Ok(())
}

/// Fraction of positions where `pred` and `truth` agree.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64, MetricError> {
    same_len("accuracy", pred.len(), truth.len())?;
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(hits as f64 / pred.len() as f64)
}

/// Unweighted mean of per-class F1 over `classes` classes. A class that is
/// neither predicted nor present scores 0.
pub fn macro_f1(pred: &[usize], truth: &[usize], classes: usize) -> Result<f64, MetricError> {
    same_len("macro_f1", pred.len(), truth.len())?;
    if classes == 0 {
        return Err(MetricError::Undefined("macro_f1 with zero classes"));
    }
    let mut tp = vec![0usize; classes];
    let mut fp = vec![0usize; classes];
    let mut fneg = vec![0usize; classes];
    for (&p, &t) in pred.iter().zip(truth) {
        if p >= classes || t >= classes {
            return Err(MetricError::Undefined("macro_f1 with out-of-range class"));
        }
        if p == t {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fneg[t] += 1;
        }
    }
    let total: f64 = (0..classes)
        .map(|c| {
            let denom = 2 * tp[c] + fp[c] + fneg[c];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[c] as f64 / denom as f64
            }
        })
        .sum();
    Ok(total / classes as f64)
}
