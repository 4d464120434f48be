use crate::cohort::Label;
use crate::error::{Error, Result};

/// Rank-based (Mann-Whitney) area under the ROC curve. Tied scores share
/// their average rank, so a tied positive/negative pair counts one half.
pub fn auc(scores: &[f64], labels: &[Label]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch(scores.len(), labels.len()));
    }
    let n_pos = labels.iter().filter(|l| l.is_positive()).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::AucUndefined);
    }
    if let Some(bad) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::Validation(format!("score {bad} is not a number")));
    }

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_unstable_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Sum of 1-based ranks of the positives; a tie group spanning sorted
    // positions i..j gets rank (i + 1 + j) / 2.
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let positives = order[i..j]
            .iter()
            .filter(|&&k| labels[k].is_positive())
            .count();
        rank_sum += positives as f64 * (i + 1 + j) as f64 / 2.0;
        i = j;
    }
    let p = n_pos as f64;
    let u = rank_sum - p * (p + 1.0) / 2.0;
    Ok(u / (p * n_neg as f64))
}
