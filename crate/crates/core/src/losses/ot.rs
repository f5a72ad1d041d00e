use serde::{Deserialize, Serialize};

use super::{bce, clamp_prob, GradWrt, LossOutput};
use crate::error::{Error, Result};

/// Per-instance targets derived from a bag's label count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabels {
    pub labels: Vec<f64>,
    pub soft: bool,
}

fn integer_count(label_sum: f64, n: usize) -> Result<usize> {
    let r = label_sum.round();
    if (label_sum - r).abs() > 1e-9 || r < 0.0 || r > n as f64 {
        return Err(Error::invalid(format!(
            "label sum {label_sum} is not an integer count in 0..={n}"
        )));
    }
    Ok(r as usize)
}

/// Labels the `y_B` members with the highest predictions as 1 (ties go to the lower
/// slot index), the rest 0.
pub fn ot_greedy_pseudolabels(preds: &[f64], label_sum: f64) -> Result<PseudoLabels> {
    let k = integer_count(label_sum, preds.len())?;
    let mut order: Vec<usize> = (0..preds.len()).collect();
    order.sort_by(|&a, &b| preds[b].total_cmp(&preds[a]).then(a.cmp(&b)));
    let mut labels = vec![0.0; preds.len()];
    for &i in &order[..k] {
        labels[i] = 1.0;
    }
    Ok(PseudoLabels { labels, soft: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SinkhornMode {
    Hard,
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinkhornOptions {
    pub epsilon: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for SinkhornOptions {
    fn default() -> Self {
        SinkhornOptions { epsilon: 0.1, max_iters: 200, tol: 1e-6 }
    }
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Entropic transport plan between the bag's instances (mass `1/n` each) and the
/// classes {0, 1} (mass `1 − z`, `z`), with cost `−log p` for class 1 and
/// `−log(1 − p)` for class 0. Returns `plan[i] = [P_i0, P_i1]`.
///
/// The Sinkhorn fixed point has rows `P_i1 = σ((t − d_i)/ε)/n` with `d_i` the cost
/// difference and a scalar dual `t` set by the class-1 marginal. With two classes
/// that marginal equation is monotone in `t`, so it is solved by bisection instead of
/// alternating scaling (which stalls on nearly degenerate bags).
pub fn sinkhorn_plan(preds: &[f64], z: f64, opts: &SinkhornOptions) -> Result<Vec<[f64; 2]>> {
    let n = preds.len();
    if n == 0 {
        return Err(Error::invalid("empty bag"));
    }
    if !(opts.epsilon > 0.0) {
        return Err(Error::invalid("Sinkhorn regularization must be positive"));
    }
    if !(0.0..=1.0).contains(&z) {
        return Err(Error::invalid(format!("label proportion {z} outside [0, 1]")));
    }
    let a = 1.0 / n as f64;
    if z == 0.0 || z == 1.0 {
        let c = if z == 1.0 { 1 } else { 0 };
        return Ok((0..n).map(|_| { let mut r = [0.0; 2]; r[c] = a; r }).collect());
    }
    let eps = opts.epsilon;
    let d: Vec<f64> = preds
        .iter()
        .map(|&p| {
            let q = clamp_prob(p);
            (1.0 - q).ln() - q.ln()
        })
        .collect();
    let mass = |t: f64| d.iter().map(|&di| logistic((t - di) / eps)).sum::<f64>() * a;
    let (dmin, dmax) = d.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let mut width = eps;
    let (mut lo, mut hi) = (dmin - width, dmax + width);
    while mass(lo) > z || mass(hi) < z {
        width *= 2.0;
        lo = dmin - width;
        hi = dmax + width;
    }
    for _ in 0..opts.max_iters.max(200) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let m = mass(mid);
        if (m - z).abs() < opts.tol * 1e-6 {
            lo = mid;
            hi = mid;
            break;
        }
        if m < z {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    Ok(d.iter()
        .map(|&di| {
            let p1 = a * logistic((t - di) / eps);
            [a - p1, p1]
        })
        .collect())
}

/// Soft mode: `n · P_i1` per instance. Hard mode: 1 where `P_i1 > P_i0`.
pub fn sinkhorn_pseudolabels(
    preds: &[f64],
    label_sum: f64,
    opts: &SinkhornOptions,
    mode: SinkhornMode,
) -> Result<PseudoLabels> {
    let n = preds.len() as f64;
    let plan = sinkhorn_plan(preds, label_sum / n, opts)?;
    let labels = match mode {
        SinkhornMode::Soft => plan.iter().map(|r| (r[1] * n).clamp(0.0, 1.0)).collect(),
        SinkhornMode::Hard => plan.iter().map(|r| if r[1] > r[0] { 1.0 } else { 0.0 }).collect(),
    };
    Ok(PseudoLabels { labels, soft: mode == SinkhornMode::Soft })
}

/// Mean instance BCE of `preds` against the pseudo-labels.
pub fn pseudo_label_bce(preds: &[f64], pseudo: &[f64]) -> Result<LossOutput> {
    if preds.len() != pseudo.len() || preds.is_empty() {
        return Err(Error::invalid("predictions and pseudo-labels must align and be non-empty"));
    }
    let n = preds.len() as f64;
    let mut value = 0.0;
    let mut grad = vec![0.0; preds.len()];
    for i in 0..preds.len() {
        let (v, d) = bce(pseudo[i], preds[i]);
        value += v;
        grad[i] = d / n;
    }
    Ok(LossOutput { value: value / n, grad, wrt: GradWrt::Predictions })
}
