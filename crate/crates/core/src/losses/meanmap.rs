use serde::{Deserialize, Serialize};

use super::{BagBatch, GradWrt, LossOutput};
use crate::bagging::BagCollection;
use crate::error::{Error, Result};
use crate::metrics::FeatureSpace;

/// First step of Mean-Map: per-bag weights `z_B` and the resulting estimate of the
/// mean of `y·x` over the bagged instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanMapStat {
    pub bag_weights: Vec<f64>,
    pub mu_xy: Vec<f64>,
}

pub fn meanmap_mu(coll: &BagCollection, space: &FeatureSpace) -> Result<MeanMapStat> {
    let n = coll.num_instances();
    if n == 0 {
        return Err(Error::invalid("mean map of an empty collection"));
    }
    let mut mu = vec![0.0; space.dim()];
    let mut weights = Vec::with_capacity(coll.len());
    for b in &coll.bags {
        let z = b.label_proportion();
        weights.push(z);
        for &i in b.members() {
            let (idx, val) = space.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                mu[j as usize] += z * v;
            }
        }
    }
    mu.iter_mut().for_each(|v| *v /= n as f64);
    Ok(MeanMapStat { bag_weights: weights, mu_xy: mu })
}

fn softplus(f: f64) -> f64 {
    f.max(0.0) + (-f.abs()).exp().ln_1p()
}

/// `(1/n)[Σ_i softplus(f_i) − Σ_B z_B Σ_{i∈B} f_i]` over logits `f`.
pub fn meanmap_loss(batch: &BagBatch, logits: &[f64]) -> Result<LossOutput> {
    batch.check_preds(logits)?;
    let n = logits.len() as f64;
    let mut value = 0.0;
    let mut grad = vec![0.0; logits.len()];
    for b in &batch.bags {
        let z = b.proportion();
        for i in b.range() {
            let f = logits[i];
            value += softplus(f) - z * f;
            grad[i] = (1.0 / (1.0 + (-f).exp()) - z) / n;
        }
    }
    Ok(LossOutput { value: value / n, grad, wrt: GradWrt::Logits })
}
