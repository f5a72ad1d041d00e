use super::{bce, BagBatch, GradWrt, LossOutput};
use crate::error::Result;

fn bag_sums(batch: &BagBatch, preds: &[f64]) -> Vec<f64> {
    batch.bags.iter().map(|b| preds[b.range()].iter().sum()).collect()
}

/// Σ_B bce(z_B, ẑ_B) over bag proportions.
pub fn dllp_bce(batch: &BagBatch, preds: &[f64]) -> Result<LossOutput> {
    batch.check_preds(preds)?;
    let mut value = 0.0;
    let mut grad = vec![0.0; preds.len()];
    for (b, s) in batch.bags.iter().zip(bag_sums(batch, preds)) {
        let k = b.len as f64;
        let (v, d) = bce(b.proportion(), s / k);
        value += v;
        grad[b.range()].fill(d / k);
    }
    Ok(LossOutput { value, grad, wrt: GradWrt::Predictions })
}

/// Σ_B (y_B − ŷ_B)² over bag label sums.
pub fn dllp_mse(batch: &BagBatch, preds: &[f64]) -> Result<LossOutput> {
    batch.check_preds(preds)?;
    let mut value = 0.0;
    let mut grad = vec![0.0; preds.len()];
    for (b, s) in batch.bags.iter().zip(bag_sums(batch, preds)) {
        let r = s - b.label_sum;
        value += r * r;
        grad[b.range()].fill(2.0 * r);
    }
    Ok(LossOutput { value, grad, wrt: GradWrt::Predictions })
}

/// Σ_B |y_B − ŷ_B| over bag label sums; subgradient 0 at a tie.
pub fn dllp_mae(batch: &BagBatch, preds: &[f64]) -> Result<LossOutput> {
    batch.check_preds(preds)?;
    let mut value = 0.0;
    let mut grad = vec![0.0; preds.len()];
    for (b, s) in batch.bags.iter().zip(bag_sums(batch, preds)) {
        let r = s - b.label_sum;
        value += r.abs();
        let d = if r > 0.0 { 1.0 } else if r < 0.0 { -1.0 } else { 0.0 };
        grad[b.range()].fill(d);
    }
    Ok(LossOutput { value, grad, wrt: GradWrt::Predictions })
}
