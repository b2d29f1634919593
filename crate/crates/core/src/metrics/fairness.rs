use super::{same_len, MetricError};

fn rate(hits: usize, total: usize) -> f64 {
    hits as f64 / total as f64
}

/// `|P(ŷ=1 | s=0) - P(ŷ=1 | s=1)|`.
pub fn demographic_parity(pred: &[u8], sensitive: &[u8]) -> Result<f64, MetricError> {
    same_len("demographic_parity", pred.len(), sensitive.len())?;
    let mut total = [0usize; 2];
    let mut accepted = [0usize; 2];
    for (&p, &s) in pred.iter().zip(sensitive) {
        let g = usize::from(s != 0);
        total[g] += 1;
        accepted[g] += usize::from(p != 0);
    }
    if total[0] == 0 || total[1] == 0 {
        return Err(MetricError::Undefined("demographic parity with an empty group"));
    }
    Ok((rate(accepted[0], total[0]) - rate(accepted[1], total[1])).abs())
}

/// True-positive-rate gap `|P(ŷ=1 | y=1, s=0) - P(ŷ=1 | y=1, s=1)|`.
pub fn equalized_odds(pred: &[u8], truth: &[u8], sensitive: &[u8]) -> Result<f64, MetricError> {
    same_len("equalized_odds", pred.len(), truth.len())?;
    same_len("equalized_odds", pred.len(), sensitive.len())?;
    let mut positives = [0usize; 2];
    let mut caught = [0usize; 2];
    for ((&p, &y), &s) in pred.iter().zip(truth).zip(sensitive) {
        if y == 0 {
            continue;
        }
        let g = usize::from(s != 0);
        positives[g] += 1;
        caught[g] += usize::from(p != 0);
    }
    if positives[0] == 0 || positives[1] == 0 {
        return Err(MetricError::Undefined("equalized odds with a group lacking positives"));
    }
    Ok((rate(caught[0], positives[0]) - rate(caught[1], positives[1])).abs())
}
