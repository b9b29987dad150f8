use crate::error::{Error, Result};

/// Mann–Whitney ROC AUC: the fraction of (positive, negative) pairs ranked
/// correctly, ties counting one half. Computed from average ranks.
pub fn roc_auc(scores: &[f64], labels: &[i8]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), got: scores.len() });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("NaN score"));
    }
    let n_pos = labels.iter().filter(|&&l| l > 0).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Degenerate("roc_auc needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Twice the rank sum keeps tied (half-integer) ranks exact.
    let mut twice_rank_sum_pos: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // Ranks i+1 ..= j+1 share their average.
        let twice_avg = (i + 1 + j + 1) as u64;
        let pos_in_group = order[i..=j].iter().filter(|&&k| labels[k] > 0).count() as u64;
        twice_rank_sum_pos += twice_avg * pos_in_group;
        i = j + 1;
    }
    let np = n_pos as u64;
    // 2U = 2R - n_pos (n_pos + 1)
    let twice_u = twice_rank_sum_pos - np * (np + 1);
    Ok(twice_u as f64 / (2 * np * n_neg as u64) as f64)
}
