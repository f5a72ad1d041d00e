//! Planted-logistic synthetic tables for end-to-end checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{InstanceTable, Task};
use crate::model::sigmoid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedConfig {
    pub m: usize,
    pub n_cat: usize,
    pub vocab: usize,
    /// Standard deviation of the per-code logit weights.
    pub weight_sd: f64,
    pub seed: u64,
}

impl Default for PlantedConfig {
    fn default() -> Self {
        PlantedConfig { m: 50_000, n_cat: 10, vocab: 50, weight_sd: 2.0, seed: 0 }
    }
}

/// Uniform codes per column; label ~ Bernoulli(σ(Σ_c w_c[code_c] + b)) with weights
/// drawn from N(0, weight_sd²) and `b` centering the expected logit at zero.
/// Returns the table and the true logit of every row.
pub fn planted_logistic(cfg: &PlantedConfig) -> Result<(InstanceTable, Vec<f64>)> {
    if cfg.m == 0 || cfg.n_cat == 0 || cfg.vocab == 0 {
        return Err(Error::invalid("rows, columns and vocabulary must be positive"));
    }
    let normal = Normal::new(0.0, cfg.weight_sd)
        .map_err(|e| Error::invalid(format!("weight sd: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let weights: Vec<Vec<f64>> = (0..cfg.n_cat)
        .map(|_| (0..cfg.vocab).map(|_| normal.sample(&mut rng)).collect())
        .collect();
    let bias = -weights.iter().map(|w| w.iter().sum::<f64>() / cfg.vocab as f64).sum::<f64>();
    let mut cat = Vec::with_capacity(cfg.m * cfg.n_cat);
    let mut labels = Vec::with_capacity(cfg.m);
    let mut logits = Vec::with_capacity(cfg.m);
    for _ in 0..cfg.m {
        let mut z = bias;
        for w in &weights {
            let code = rng.random_range(0..cfg.vocab);
            z += w[code];
            cat.push(code as u32);
        }
        labels.push(if rng.random::<f64>() < sigmoid(z) { 1.0 } else { 0.0 });
        logits.push(z);
    }
    let table = InstanceTable::new(
        Task::Binary,
        (1..=cfg.n_cat).map(|c| format!("C{c}")).collect(),
        vec![],
        "label".into(),
        vec![cfg.vocab; cfg.n_cat],
        cat,
        vec![],
        labels,
    )?;
    Ok((table, logits))
}

/// Regression variant: label = `max(0, 1 + Σ_c w_c[code_c] / scale)` without noise.
pub fn planted_linear_regression(cfg: &PlantedConfig) -> Result<InstanceTable> {
    let (t, logits) = planted_logistic(cfg)?;
    let scale = 4.0 * cfg.weight_sd * (cfg.n_cat as f64).sqrt();
    let labels: Vec<f64> = logits.iter().map(|z| (1.0 + z / scale).max(0.0)).collect();
    let cat: Vec<u32> = (0..t.len()).flat_map(|i| t.cat_row(i).to_vec()).collect();
    InstanceTable::new(
        Task::Regression,
        t.cat_names().to_vec(),
        vec![],
        "label".into(),
        t.vocab_sizes().to_vec(),
        cat,
        vec![],
        labels,
    )
}
