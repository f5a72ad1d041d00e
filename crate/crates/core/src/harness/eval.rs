use std::cmp::Ordering;

use crate::error::{Error, Result};

fn check_lengths(preds: &[f64], labels: &[f64]) -> Result<()> {
    if preds.len() != labels.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} labels",
            preds.len(),
            labels.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::invalid("no predictions to evaluate"));
    }
    Ok(())
}

/// Area under the ROC curve: the probability that a random positive scores above a
/// random negative, ties counting one half. Computed from tie-averaged ranks with
/// integer arithmetic on doubled ranks.
pub fn auc(preds: &[f64], labels: &[f64]) -> Result<f64> {
    check_lengths(preds, labels)?;
    if preds.iter().any(|p| p.is_nan()) {
        return Err(Error::invalid("NaN prediction"));
    }
    let mut n_pos: u64 = 0;
    for &y in labels {
        match y {
            y if y == 1.0 => n_pos += 1,
            y if y == 0.0 => {}
            y => return Err(Error::invalid(format!("label {y} is not binary"))),
        }
    }
    let n_neg = labels.len() as u64 - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::invalid("AUC needs both classes"));
    }
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[a].partial_cmp(&preds[b]).unwrap_or(Ordering::Equal));
    // sum over positives of twice their (1-based, tie-averaged) rank
    let mut twice_rank_sum: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && preds[order[j + 1]] == preds[order[i]] {
            j += 1;
        }
        let twice_avg = (i + 1 + j + 1) as u64;
        let pos = order[i..=j].iter().filter(|&&k| labels[k] == 1.0).count() as u64;
        twice_rank_sum += pos * twice_avg;
        i = j + 1;
    }
    let twice_u = twice_rank_sum - n_pos * (n_pos + 1);
    Ok(twice_u as f64 / (2 * n_pos * n_neg) as f64)
}

pub fn mse(preds: &[f64], labels: &[f64]) -> Result<f64> {
    check_lengths(preds, labels)?;
    Ok(preds.iter().zip(labels).map(|(p, y)| (p - y) * (p - y)).sum::<f64>() / preds.len() as f64)
}

/// Fraction of instances where `pred >= 0.5` agrees with a label of 1.
pub fn accuracy(preds: &[f64], labels: &[f64]) -> Result<f64> {
    check_lengths(preds, labels)?;
    let hits = preds
        .iter()
        .zip(labels)
        .filter(|(&p, &y)| (p >= 0.5) == (y == 1.0))
        .count();
    Ok(hits as f64 / preds.len() as f64)
}
