use rand::seq::index;
use rand::Rng;

use super::{dllp_bce, dllp_mse, BagBatch, LossOutput};
use crate::error::{Error, Result};
use crate::model::SparseInput;

pub const SIM_SAMPLE_SIZE: usize = 400;

fn sparse_sq_dist(a: &SparseInput, b: &SparseInput) -> f64 {
    let (mut i, mut j, mut s) = (0, 0, 0.0);
    while i < a.indices.len() || j < b.indices.len() {
        let ai = a.indices.get(i).copied().unwrap_or(u32::MAX);
        let bj = b.indices.get(j).copied().unwrap_or(u32::MAX);
        let d = if ai == bj {
            let d = a.values[i] - b.values[j];
            i += 1;
            j += 1;
            d
        } else if ai < bj {
            i += 1;
            a.values[i - 1]
        } else {
            j += 1;
            b.values[j - 1]
        };
        s += d * d;
    }
    s
}

/// Sorted slot indices of `min(size, n)` instances drawn without replacement.
pub fn sample_for_similarity<R: Rng>(n: usize, size: usize, rng: &mut R) -> Vec<usize> {
    let mut s = index::sample(rng, n, size.min(n)).into_vec();
    s.sort_unstable();
    s
}

/// Base proportion loss plus `λ` times the mean over sampled pairs of
/// `exp(−‖x_i − x_j‖²)(ŷ_i − ŷ_j)²`. `regression` selects DLLP-MSE as the base.
pub fn simllp_loss_with_sample(
    batch: &BagBatch,
    preds: &[f64],
    inputs: &[&SparseInput],
    sample: &[usize],
    lambda: f64,
    regression: bool,
) -> Result<LossOutput> {
    if !(lambda >= 0.0) {
        return Err(Error::invalid(format!("similarity weight must be non-negative, got {lambda}")));
    }
    if inputs.len() != preds.len() {
        return Err(Error::invalid("one input vector per prediction required"));
    }
    let mut out = if regression { dllp_mse(batch, preds)? } else { dllp_bce(batch, preds)? };
    let k = sample.len();
    if lambda == 0.0 || k < 2 {
        return Ok(out);
    }
    let pairs = (k * (k - 1) / 2) as f64;
    let mut term = 0.0;
    for a in 0..k {
        for b in a + 1..k {
            let (i, j) = (sample[a], sample[b]);
            let w = (-sparse_sq_dist(inputs[i], inputs[j])).exp();
            let diff = preds[i] - preds[j];
            term += w * diff * diff;
            let g = lambda * 2.0 * w * diff / pairs;
            out.grad[i] += g;
            out.grad[j] -= g;
        }
    }
    out.value += lambda * term / pairs;
    Ok(out)
}

pub fn simllp_loss<R: Rng>(
    batch: &BagBatch,
    preds: &[f64],
    inputs: &[&SparseInput],
    lambda: f64,
    regression: bool,
    rng: &mut R,
) -> Result<LossOutput> {
    let sample = sample_for_similarity(preds.len(), SIM_SAMPLE_SIZE, rng);
    simllp_loss_with_sample(batch, preds, inputs, &sample, lambda, regression)
}
