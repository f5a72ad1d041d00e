//! Bag-level training objectives: proportion matching (DLLP), generalized bags,
//! Easy-LLP soft surrogates, similarity-regularized DLLP, Mean-Map and optimal
//! transport pseudo-labeling.

mod dllp;
mod easyllp;
mod genbags;
mod meanmap;
mod ot;
mod simllp;

pub use dllp::{dllp_bce, dllp_mae, dllp_mse};
pub use easyllp::{easyllp_loss, easyllp_surrogates};
pub use genbags::{
    draw_genbag_weights, genbags_loss, genbags_loss_with_weights, GenBagWeights, GENBAG_BLOCK,
    GENBAG_DRAWS,
};
pub use meanmap::{meanmap_loss, meanmap_mu, MeanMapStat};
pub use ot::{
    ot_greedy_pseudolabels, pseudo_label_bce, sinkhorn_pseudolabels, sinkhorn_plan, PseudoLabels,
    SinkhornMode, SinkhornOptions,
};
pub use simllp::{sample_for_similarity, simllp_loss, simllp_loss_with_sample, SIM_SAMPLE_SIZE};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bagging::BagCollection;
use crate::error::{Error, Result};
use crate::ingest::Task;
use crate::model::sigmoid;

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` inside log terms.
pub fn prob_eps() -> f64 {
    sigmoid(-crate::model::LOGIT_CLAMP)
}

/// One bag inside a minibatch: a run of the flattened instance list.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchBag {
    pub start: usize,
    pub len: usize,
    pub label_sum: f64,
}

impl BatchBag {
    pub fn range(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }

    pub fn proportion(&self) -> f64 {
        self.label_sum / self.len as f64
    }
}

/// Bags of a minibatch with their members flattened in bag order.
#[derive(Debug, Clone, PartialEq)]
pub struct BagBatch {
    pub bags: Vec<BatchBag>,
    /// Table row of every prediction slot.
    pub instances: Vec<usize>,
}

impl BagBatch {
    /// Batch of the bags `ids` of `coll`, in the given order.
    pub fn from_collection(coll: &BagCollection, ids: &[usize]) -> Result<Self> {
        let parts = ids
            .iter()
            .map(|&k| {
                let b = coll
                    .bags
                    .get(k)
                    .ok_or_else(|| Error::invalid(format!("bag {k} out of range")))?;
                Ok((b.members().to_vec(), b.label_sum()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(parts)
    }

    pub fn from_parts(parts: Vec<(Vec<usize>, f64)>) -> Result<Self> {
        let mut bags = Vec::with_capacity(parts.len());
        let mut instances = Vec::new();
        for (members, label_sum) in parts {
            if members.is_empty() {
                return Err(Error::invalid("batch bag must be non-empty"));
            }
            bags.push(BatchBag { start: instances.len(), len: members.len(), label_sum });
            instances.extend(members);
        }
        Ok(BagBatch { bags, instances })
    }

    pub fn num_instances(&self) -> usize {
        self.instances.len()
    }

    /// Bag label proportion for every prediction slot.
    pub fn slot_proportions(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.instances.len()];
        for b in &self.bags {
            out[b.range()].fill(b.proportion());
        }
        out
    }

    fn check_preds(&self, preds: &[f64]) -> Result<()> {
        if preds.len() != self.instances.len() {
            return Err(Error::invalid(format!(
                "{} predictions for {} batch instances",
                preds.len(),
                self.instances.len()
            )));
        }
        Ok(())
    }
}

/// What [`LossOutput::grad`] is a derivative with respect to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradWrt {
    Predictions,
    Logits,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossOutput {
    pub value: f64,
    pub grad: Vec<f64>,
    pub wrt: GradWrt,
}

/// Training method identifiers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "dllp-bce")]
    DllpBce,
    #[serde(rename = "dllp-mse")]
    DllpMse,
    #[serde(rename = "dllp-mae")]
    DllpMae,
    #[serde(rename = "genbags")]
    GenBags,
    #[serde(rename = "easy-llp")]
    EasyLlp,
    #[serde(rename = "ot-llp")]
    OtLlp,
    #[serde(rename = "hard-erot-llp")]
    HardErotLlp,
    #[serde(rename = "soft-erot-llp")]
    SoftErotLlp,
    #[serde(rename = "sim-llp")]
    SimLlp,
    #[serde(rename = "mean-map")]
    MeanMap,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::DllpBce,
        Method::DllpMse,
        Method::DllpMae,
        Method::GenBags,
        Method::EasyLlp,
        Method::OtLlp,
        Method::HardErotLlp,
        Method::SoftErotLlp,
        Method::SimLlp,
        Method::MeanMap,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::DllpBce => "dllp-bce",
            Method::DllpMse => "dllp-mse",
            Method::DllpMae => "dllp-mae",
            Method::GenBags => "genbags",
            Method::EasyLlp => "easy-llp",
            Method::OtLlp => "ot-llp",
            Method::HardErotLlp => "hard-erot-llp",
            Method::SoftErotLlp => "soft-erot-llp",
            Method::SimLlp => "sim-llp",
            Method::MeanMap => "mean-map",
        }
    }

    pub fn supports(self, task: Task) -> bool {
        match task {
            Task::Binary => true,
            Task::Regression => matches!(
                self,
                Method::DllpMse | Method::DllpMae | Method::GenBags | Method::SimLlp
            ),
        }
    }

    /// Methods with a pseudo-labeling phase after DLLP-BCE pretraining.
    pub fn is_ot(self) -> bool {
        matches!(self, Method::OtLlp | Method::HardErotLlp | Method::SoftErotLlp)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?}")))
    }
}

fn clamp_prob(p: f64) -> f64 {
    let e = prob_eps();
    p.clamp(e, 1.0 - e)
}

/// Binary cross-entropy of target `t` against probability `p` (clamped), with its
/// derivative in `p` (zero where the clamp is active).
fn bce(t: f64, p: f64) -> (f64, f64) {
    let q = clamp_prob(p);
    let v = -(t * q.ln() + (1.0 - t) * (1.0 - q).ln());
    let d = if q == p { -t / q + (1.0 - t) / (1.0 - q) } else { 0.0 };
    (v, d)
}
