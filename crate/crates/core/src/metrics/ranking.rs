use super::{same_len, MetricError};

fn check(scores: &[f64], labels: &[u8]) -> Result<(usize, usize), MetricError> {
    same_len("ranking", scores.len(), labels.len())?;
    if scores.iter().any(|s| s.is_nan()) {
        return Err(MetricError::Undefined("ranking metric with NaN score"));
    }
    let pos = labels.iter().filter(|&&l| l != 0).count();
    Ok((pos, labels.len() - pos))
}

/// Area under the ROC curve via the rank-sum statistic, averaging ranks over
/// ties. Equals `P(s+ > s-) + P(s+ = s-) / 2`.
pub fn auroc(scores: &[f64], labels: &[u8]) -> Result<f64, MetricError> {
    let (pos, neg) = check(scores, labels)?;
    if pos == 0 || neg == 0 {
        return Err(MetricError::Undefined("AUROC with a single class"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Ranks are 1-based; a tie block spanning ranks i+1..=j gets (i+1+j)/2.
    // Doubling keeps every quantity an exact integer.
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let twice_avg = (i + 1 + j) as u128;
        let block_pos = order[i..j].iter().filter(|&&k| labels[k] != 0).count() as u128;
        twice_rank_sum += twice_avg * block_pos;
        i = j;
    }
    let (pos, neg) = (pos as u128, neg as u128);
    let twice_u = twice_rank_sum - pos * (pos + 1);
    Ok(twice_u as f64 / 2.0 / (pos * neg) as f64)
}

/// Average precision: mean of the precision at each positive when items are
/// taken in descending score order, ties by ascending index.
pub fn average_precision(scores: &[f64], labels: &[u8]) -> Result<f64, MetricError> {
    let (pos, _) = check(scores, labels)?;
    if pos == 0 {
        return Err(MetricError::Undefined("average precision without positives"));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut hits = 0usize;
    let mut total = 0.0;
    for (k, &i) in order.iter().enumerate() {
        if labels[i] != 0 {
            hits += 1;
            total += hits as f64 / (k + 1) as f64;
        }
    }
    Ok(total / pos as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auroc_examples() {
        assert_eq!(auroc(&[0.9, 0.8, 0.4, 0.3], &[1, 0, 1, 0]).unwrap(), 0.75);
        assert_eq!(auroc(&[0.9, 0.8, 0.1], &[1, 1, 0]).unwrap(), 1.0);
        assert_eq!(auroc(&[0.5; 6], &[1, 0, 1, 0, 0, 1]).unwrap(), 0.5);
        assert!(auroc(&[0.1, 0.2], &[1, 1]).is_err());
        assert!(auroc(&[0.1, 0.2], &[0, 0]).is_err());
    }

    #[test]
    fn ap_examples() {
        assert_eq!(average_precision(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0]).unwrap(), 1.0);
        assert_eq!(average_precision(&[0.9, 0.8, 0.7], &[0, 1, 1]).unwrap(), (1.0 / 2.0 + 2.0 / 3.0) / 2.0);
        for n in 1..20 {
            let mut scores: Vec<f64> = (0..n).map(|i| (n - i) as f64).collect();
            scores[n - 1] = -1.0;
            let mut labels = vec![0u8; n];
            labels[n - 1] = 1;
            assert_eq!(average_precision(&scores, &labels).unwrap(), 1.0 / n as f64);
        }
    }

    #[test]
    fn ap_ties_follow_index() {
        // Tied pair: index 0 (negative) is taken before index 1 (positive).
        assert_eq!(average_precision(&[0.5, 0.5], &[0, 1]).unwrap(), 0.5);
        assert_eq!(average_precision(&[0.5, 0.5], &[1, 0]).unwrap(), 1.0);
    }
}
