use super::{bce, BagBatch, GradWrt, LossOutput};
use crate::error::{Error, Result};

/// `s_i = |B|·(z_B − p) + p` for every slot; not clipped to [0, 1].
pub fn easyllp_surrogates(batch: &BagBatch, prior: f64) -> Vec<f64> {
    let mut s = vec![0.0; batch.num_instances()];
    for b in &batch.bags {
        s[b.range()].fill(b.len as f64 * (b.proportion() - prior) + prior);
    }
    s
}

/// Mean over instances of `s·ℓ(ŷ, 1) + (1 − s)·ℓ(ŷ, 0)` with the soft surrogates `s`.
pub fn easyllp_loss(batch: &BagBatch, preds: &[f64], prior: f64) -> Result<LossOutput> {
    batch.check_preds(preds)?;
    if !(0.0..=1.0).contains(&prior) {
        return Err(Error::invalid(format!("label prior {prior} outside [0, 1]")));
    }
    let n = preds.len() as f64;
    let s = easyllp_surrogates(batch, prior);
    let mut value = 0.0;
    let mut grad = vec![0.0; preds.len()];
    for i in 0..preds.len() {
        let (v, d) = bce(s[i], preds[i]);
        value += v;
        grad[i] = d / n;
    }
    Ok(LossOutput { value: value / n, grad, wrt: GradWrt::Predictions })
}
