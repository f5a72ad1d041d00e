use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::FeatureSpace;
use crate::bagging::{Bag, BagCollection};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distance {
    L2,
    L2Sq,
}

impl Distance {
    fn apply(self, sq: f64) -> f64 {
        match self {
            Distance::L2 => sq.sqrt(),
            Distance::L2Sq => sq,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SepStats {
    pub mean_inter: f64,
    pub mean_intra: f64,
    /// `mean_inter / mean_intra`; `+inf` when `mean_intra == 0` (serialized as `null`).
    #[serde(serialize_with = "ser_ratio", deserialize_with = "de_ratio")]
    pub ratio: f64,
    /// Set when `mean_intra == 0` and the ratio is the infinite sentinel.
    #[serde(default)]
    pub intra_zero: bool,
}

impl SepStats {
    pub fn new(mean_inter: f64, mean_intra: f64) -> Self {
        let intra_zero = mean_intra == 0.0;
        let ratio = if intra_zero { f64::INFINITY } else { mean_inter / mean_intra };
        SepStats { mean_inter, mean_intra, ratio, intra_zero }
    }
}

fn ser_ratio<S: Serializer>(r: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if r.is_finite() {
        s.serialize_some(r)
    } else {
        s.serialize_none()
    }
}

fn de_ratio<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
}

/// Square matrix of pairwise bag separations.
#[derive(Debug, Clone, PartialEq)]
pub struct BagSepMatrix {
    n: usize,
    data: Vec<f64>,
}

impl BagSepMatrix {
    pub fn size(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn mean_intra(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum::<f64>() / self.n as f64
    }

    /// Mean over ordered pairs of distinct bags; needs at least two bags.
    pub fn mean_inter(&self) -> Result<f64> {
        if self.n < 2 {
            return Err(Error::invalid("inter-bag separation needs at least two bags"));
        }
        let mut total = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                if i != j {
                    total += self.get(i, j);
                }
            }
        }
        Ok(total / (self.n * (self.n - 1)) as f64)
    }

    pub fn stats(&self) -> Result<SepStats> {
        Ok(SepStats::new(self.mean_inter()?, self.mean_intra()))
    }
}

/// Direct pairwise computation over every instance pair. Quadratic in the number of
/// instances; serves as the reference for [`sep_stats_fast_l2sq`].
pub fn bag_sep_naive(space: &FeatureSpace, coll: &BagCollection, d: Distance) -> Result<BagSepMatrix> {
    if coll.is_empty() {
        return Err(Error::invalid("bag separation needs a non-empty collection"));
    }
    let dense: Vec<Vec<Vec<f64>>> = coll
        .bags
        .iter()
        .map(|b| b.members().iter().map(|&i| space.dense_row(i)).collect())
        .collect();
    let n = coll.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut s = 0.0;
                    for x in &dense[i] {
                        for y in &dense[j] {
                            let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                            s += d.apply(sq);
                        }
                    }
                    s / (dense[i].len() * dense[j].len()) as f64
                })
                .collect()
        })
        .collect();
    Ok(BagSepMatrix { n, data: rows.concat() })
}

/// Per-bag aggregates: mean squared norm and the sparse mean vector.
struct BagAggregate {
    mean_sq_norm: f64,
    mu_idx: Vec<u32>,
    mu_val: Vec<f64>,
}

fn aggregate(space: &FeatureSpace, bag: &Bag, scratch: &mut [f64], touched: &mut Vec<u32>) -> BagAggregate {
    let k = bag.len() as f64;
    let mut sq = 0.0;
    for &i in bag.members() {
        let (idx, val) = space.row(i);
        for (&j, &v) in idx.iter().zip(val) {
            if scratch[j as usize] == 0.0 {
                touched.push(j);
            }
            scratch[j as usize] += v;
            sq += v * v;
        }
    }
    touched.sort_unstable();
    touched.dedup();
    let mut mu_idx = Vec::with_capacity(touched.len());
    let mut mu_val = Vec::with_capacity(touched.len());
    for &j in touched.iter() {
        let v = scratch[j as usize];
        scratch[j as usize] = 0.0;
        if v != 0.0 {
            mu_idx.push(j);
            mu_val.push(v / k);
        }
    }
    touched.clear();
    BagAggregate { mean_sq_norm: sq / k, mu_idx, mu_val }
}

/// Mean intra- and inter-bag separation under squared Euclidean distance using
/// per-bag first and second moments, linear in the number of non-zeros.
pub fn sep_stats_fast_l2sq(space: &FeatureSpace, coll: &BagCollection) -> Result<SepStats> {
    let nb = coll.len();
    if nb < 2 {
        return Err(Error::invalid("separation statistics need at least two bags"));
    }
    let dim = space.dim();
    let aggs: Vec<BagAggregate> = coll
        .bags
        .par_iter()
        .map_init(
            || (vec![0.0; dim], Vec::new()),
            |(scratch, touched), bag| aggregate(space, bag, scratch, touched),
        )
        .collect();

    let mut sum_norm = 0.0;
    let mut sum_mu_sq = 0.0;
    let mut intra = 0.0;
    let mut mu_total = vec![0.0; dim];
    for a in &aggs {
        let mu_sq: f64 = a.mu_val.iter().map(|v| v * v).sum();
        sum_norm += a.mean_sq_norm;
        sum_mu_sq += mu_sq;
        intra += 2.0 * (a.mean_sq_norm - mu_sq);
        for (&j, &v) in a.mu_idx.iter().zip(&a.mu_val) {
            mu_total[j as usize] += v;
        }
    }
    let total_sq: f64 = mu_total.iter().map(|v| v * v).sum();
    let m = nb as f64;
    let mean_intra = (intra / m).max(0.0);
    let mean_inter =
        (2.0 / m * sum_norm - 2.0 / (m * (m - 1.0)) * (total_sq - sum_mu_sq)).max(0.0);
    Ok(SepStats::new(mean_inter, mean_intra))
}
