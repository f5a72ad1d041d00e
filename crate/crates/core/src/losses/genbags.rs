use rand::Rng;
use rand_distr::StandardNormal;

use super::{BagBatch, GradWrt, LossOutput};
use crate::error::{Error, Result};

/// Bags combined into one generalized bag.
pub const GENBAG_BLOCK: usize = 4;
/// Weight vectors drawn per block.
pub const GENBAG_DRAWS: usize = 60;

/// Weight vectors for each block: `weights[block][draw]`.
pub type GenBagWeights = Vec<Vec<[f64; GENBAG_BLOCK]>>;

/// Draws `w ~ N(0, Σ)` with unit diagonal and −1/3 off-diagonal: centering a standard
/// normal 4-vector gives covariance `I − 11ᵀ/4`, scaled by 4/3.
pub fn draw_genbag_weights<R: Rng>(n_blocks: usize, draws: usize, rng: &mut R) -> GenBagWeights {
    let scale = (4.0f64 / 3.0).sqrt();
    (0..n_blocks)
        .map(|_| {
            (0..draws)
                .map(|_| {
                    let g: [f64; GENBAG_BLOCK] = std::array::from_fn(|_| rng.sample(StandardNormal));
                    let mean = g.iter().sum::<f64>() / GENBAG_BLOCK as f64;
                    g.map(|v| scale * (v - mean))
                })
                .collect()
        })
        .collect()
}

/// Mean over all (block, draw) pairs of `(Σ_j w_j (z_j − ẑ_j))²`. Consecutive runs of
/// four bags form blocks; a trailing partial block is ignored.
pub fn genbags_loss_with_weights(batch: &BagBatch, preds: &[f64], weights: &GenBagWeights) -> Result<LossOutput> {
    batch.check_preds(preds)?;
    let n_blocks = batch.bags.len() / GENBAG_BLOCK;
    if n_blocks == 0 {
        return Err(Error::invalid(format!(
            "generalized bags need at least {GENBAG_BLOCK} bags in a batch, got {}",
            batch.bags.len()
        )));
    }
    if weights.len() < n_blocks || weights[..n_blocks].iter().any(Vec::is_empty) {
        return Err(Error::invalid("missing generalized-bag weights for a block"));
    }
    let total: usize = weights[..n_blocks].iter().map(Vec::len).sum();
    let mut value = 0.0;
    let mut grad = vec![0.0; preds.len()];
    for (blk, ws) in weights[..n_blocks].iter().enumerate() {
        let bags = &batch.bags[blk * GENBAG_BLOCK..(blk + 1) * GENBAG_BLOCK];
        let resid: [f64; GENBAG_BLOCK] = std::array::from_fn(|j| {
            let b = &bags[j];
            b.proportion() - preds[b.range()].iter().sum::<f64>() / b.len as f64
        });
        let mut d_zhat = [0.0; GENBAG_BLOCK];
        for w in ws {
            let r: f64 = w.iter().zip(&resid).map(|(a, b)| a * b).sum();
            value += r * r;
            for j in 0..GENBAG_BLOCK {
                d_zhat[j] -= 2.0 * r * w[j];
            }
        }
        for (j, b) in bags.iter().enumerate() {
            grad[b.range()].fill(d_zhat[j] / (total as f64 * b.len as f64));
        }
    }
    Ok(LossOutput { value: value / total as f64, grad, wrt: GradWrt::Predictions })
}

pub fn genbags_loss<R: Rng>(batch: &BagBatch, preds: &[f64], rng: &mut R) -> Result<LossOutput> {
    let weights = draw_genbag_weights(batch.bags.len() / GENBAG_BLOCK, GENBAG_DRAWS, rng);
    genbags_loss_with_weights(batch, preds, &weights)
}
