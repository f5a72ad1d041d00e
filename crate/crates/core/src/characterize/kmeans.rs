use std::cmp::Ordering;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const DEFAULT_MAX_ITERS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    /// Cluster index per input point, in input order.
    pub assignment: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub inertia: f64,
    /// Objective after each assignment step.
    pub history: Vec<f64>,
    pub converged: bool,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn nearest(p: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(p, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd iterations from k-means++ seeds. Points are processed in a canonical sorted
/// order, so the result does not depend on the order of `points`.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64, max_iters: usize) -> Result<KMeansResult> {
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    let dim = points.first().map_or(0, Vec::len);
    if points.iter().any(|p| p.len() != dim || p.iter().any(|v| !v.is_finite())) {
        return Err(Error::invalid("points must be finite and share one dimension"));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| lex_cmp(&points[a], &points[b]));
    let sorted: Vec<&[f64]> = order.iter().map(|&i| points[i].as_slice()).collect();
    let distinct = 1 + sorted.windows(2).filter(|w| lex_cmp(w[0], w[1]).is_ne()).count();
    if sorted.is_empty() || k > distinct {
        return Err(Error::invalid(format!(
            "k = {k} exceeds the {} distinct points",
            if sorted.is_empty() { 0 } else { distinct }
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Vec<f64>> = vec![sorted[rng.random_range(0..sorted.len())].to_vec()];
    let mut d2: Vec<f64> = sorted.iter().map(|p| sq_dist(p, &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = d2.iter().rposition(|&d| d > 0.0).expect("a point differs from every center");
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 && target < d {
                pick = i;
                break;
            }
            target -= d;
        }
        let center = sorted[pick].to_vec();
        for (i, p) in sorted.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &center));
        }
        centers.push(center);
    }

    let mut assign = vec![usize::MAX; sorted.len()];
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..max_iters.max(1) {
        let mut changed = false;
        let mut inertia = 0.0;
        for (i, p) in sorted.iter().enumerate() {
            let (c, d) = nearest(p, &centers);
            inertia += d;
            if assign[i] != c {
                assign[i] = c;
                changed = true;
            }
        }
        history.push(inertia);
        if !changed {
            converged = true;
            break;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in sorted.iter().enumerate() {
            counts[assign[i]] += 1;
            for (s, v) in sums[assign[i]].iter_mut().zip(p.iter()) {
                *s += v;
            }
        }
        for c in 0..k {
            // an emptied cluster keeps its previous center
            if counts[c] > 0 {
                centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            }
        }
    }

    let inertia = sorted
        .iter()
        .zip(&assign)
        .map(|(p, &c)| sq_dist(p, &centers[c]))
        .sum();
    let mut assignment = vec![0; points.len()];
    for (pos, &orig) in order.iter().enumerate() {
        assignment[orig] = assign[pos];
    }
    Ok(KMeansResult { assignment, centers, inertia, history, converged })
}
