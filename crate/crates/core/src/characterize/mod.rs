//! Groups datasets by their hardness metrics with k-means and names the clusters
//! along three axes: bag-size tail, label-proportion variation and bag separation.

mod kmeans;

pub use kmeans::{kmeans, KMeansResult, DEFAULT_MAX_ITERS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::HardnessReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    TailSize,
    LabelVariation,
    BagSeparation,
}

impl Axis {
    pub fn as_str(self) -> &'static str {
        match self {
            Axis::TailSize => "tail_size",
            Axis::LabelVariation => "label_variation",
            Axis::BagSeparation => "bag_separation",
        }
    }

    /// Cluster names in increasing order of the axis statistic.
    pub fn default_names(self, k: usize) -> Vec<String> {
        let four: [&str; 4] = match self {
            Axis::TailSize if k == 3 => ["short-tailed", "medium-tailed", "long-tailed", ""],
            Axis::TailSize => ["very short-tailed", "short-tailed", "long-tailed", "very long-tailed"],
            Axis::LabelVariation => ["low", "medium", "high", "very high"],
            Axis::BagSeparation => ["less-separated", "medium-separated", "well-separated", "far-separated"],
        };
        if k <= 4 {
            four[..k].iter().map(|s| s.to_string()).collect()
        } else {
            (0..k).map(|i| format!("{}-{i}", self.as_str())).collect()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub axis: Axis,
    /// `(dataset_id, cluster)` in input order; clusters are ranked by the axis statistic.
    pub assignments: Vec<(String, usize)>,
    pub names: Vec<String>,
    /// Centers in the (possibly normalized) clustering space, ranked like `names`.
    pub centers: Vec<Vec<f64>>,
    pub inertia: f64,
}

impl ClusterAssignment {
    pub fn name_of(&self, dataset_id: &str) -> Option<&str> {
        self.assignments
            .iter()
            .find(|(id, _)| id == dataset_id)
            .map(|(_, c)| self.names[*c].as_str())
    }
}

/// The 50/70/85/95 percentile sizes of a report as a tuple.
pub fn tail_tuple(r: &HardnessReport) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (o, l) in out.iter_mut().zip(crate::metrics::PERCENTILE_LEVELS) {
        *o = r.percentile_sizes.get(&l).copied().unwrap_or(0) as f64;
    }
    out
}

fn zscore(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = points.len() as f64;
    let dim = points.first().map_or(0, Vec::len);
    let mut out = points.to_vec();
    for j in 0..dim {
        let mean = points.iter().map(|p| p[j]).sum::<f64>() / n;
        let sd = (points.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / n).sqrt();
        for p in out.iter_mut() {
            p[j] = if sd > 0.0 { (p[j] - mean) / sd } else { 0.0 };
        }
    }
    out
}

fn resolve_names(axis: Axis, k: usize, names: Option<Vec<String>>) -> Result<Vec<String>> {
    match names {
        Some(n) if n.len() != k => Err(Error::invalid(format!("{} names given for k = {k}", n.len()))),
        Some(n) => Ok(n),
        None => Ok(axis.default_names(k)),
    }
}

/// Clusters `space` and renumbers clusters by increasing mean of `stat`
/// (ties by original cluster index).
fn cluster_and_rank(
    axis: Axis,
    ids: Vec<String>,
    space: &[Vec<f64>],
    stat: &[f64],
    k: usize,
    seed: u64,
    names: Option<Vec<String>>,
) -> Result<ClusterAssignment> {
    let names = resolve_names(axis, k, names)?;
    let res = kmeans(space, k, seed, DEFAULT_MAX_ITERS)?;
    let mut sum = vec![0.0; k];
    let mut cnt = vec![0usize; k];
    for (&c, &s) in res.assignment.iter().zip(stat) {
        sum[c] += s;
        cnt[c] += 1;
    }
    let mean: Vec<f64> = (0..k)
        .map(|c| if cnt[c] > 0 { sum[c] / cnt[c] as f64 } else { f64::INFINITY })
        .collect();
    let mut ranked: Vec<usize> = (0..k).collect();
    ranked.sort_by(|&a, &b| mean[a].total_cmp(&mean[b]).then(a.cmp(&b)));
    let mut rank_of = vec![0; k];
    for (r, &c) in ranked.iter().enumerate() {
        rank_of[c] = r;
    }
    Ok(ClusterAssignment {
        axis,
        assignments: ids.into_iter().zip(res.assignment.iter().map(|&c| rank_of[c])).collect(),
        names,
        centers: ranked.iter().map(|&c| res.centers[c].clone()).collect(),
        inertia: res.inertia,
    })
}

/// Clusters z-scored percentile tuples; clusters are named by their mean 70th
/// percentile size.
pub fn classify_tail_size(
    items: &[(String, [f64; 4])],
    k: usize,
    seed: u64,
    names: Option<Vec<String>>,
) -> Result<ClusterAssignment> {
    let raw: Vec<Vec<f64>> = items.iter().map(|(_, t)| t.to_vec()).collect();
    let stat: Vec<f64> = items.iter().map(|(_, t)| t[1]).collect();
    let ids = items.iter().map(|(id, _)| id.clone()).collect();
    cluster_and_rank(Axis::TailSize, ids, &zscore(&raw), &stat, k, seed, names)
}

fn classify_scalar(
    axis: Axis,
    items: &[(String, f64)],
    k: usize,
    seed: u64,
    names: Option<Vec<String>>,
) -> Result<ClusterAssignment> {
    if let Some((id, v)) = items.iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::invalid(format!("dataset {id}: non-finite value {v}")));
    }
    let space: Vec<Vec<f64>> = items.iter().map(|(_, v)| vec![*v]).collect();
    let stat: Vec<f64> = items.iter().map(|(_, v)| *v).collect();
    let ids = items.iter().map(|(id, _)| id.clone()).collect();
    cluster_and_rank(axis, ids, &space, &stat, k, seed, names)
}

/// Clusters label-proportion standard deviations.
pub fn classify_label_variation(
    items: &[(String, f64)],
    k: usize,
    seed: u64,
    names: Option<Vec<String>>,
) -> Result<ClusterAssignment> {
    classify_scalar(Axis::LabelVariation, items, k, seed, names)
}

/// Clusters inter/intra separation ratios.
pub fn classify_bag_separation(
    items: &[(String, f64)],
    k: usize,
    seed: u64,
    names: Option<Vec<String>>,
) -> Result<ClusterAssignment> {
    classify_scalar(Axis::BagSeparation, items, k, seed, names)
}
