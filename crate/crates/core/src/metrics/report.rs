use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::*;
use crate::ingest::Task;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HardnessReport {
    pub num_bags: usize,
    pub num_instances: usize,
    pub mean_bag_size: f64,
    pub label_prop_stdev: f64,
    /// Keyed by percentile level (50, 70, 85, 95).
    pub percentile_sizes: BTreeMap<u32, usize>,
    pub sep: SepStats,
    pub feature_space: SpaceMode,
    pub label_bias: f64,
    pub avg_label_prop: f64,
    /// Only defined for binary labels.
    pub cramers_v: Option<f64>,
}

pub const CSV_COLUMNS: [&str; 15] = [
    "dataset_id",
    "num_bags",
    "num_instances",
    "mean_bag_size",
    "label_prop_stdev",
    "pct50",
    "pct70",
    "pct85",
    "pct95",
    "mean_inter",
    "mean_intra",
    "inter_intra_ratio",
    "label_bias",
    "avg_label_prop",
    "cramers_v",
];

/// All metrics for `coll`; separation uses the fast squared-Euclidean path over `space`.
pub fn compute_report(
    table: &InstanceTable,
    coll: &BagCollection,
    space: &FeatureSpace,
) -> Result<HardnessReport> {
    let percentile_sizes = cumu_bag_size_percentiles(coll, &PERCENTILE_LEVELS)?
        .into_iter()
        .collect();
    let cramers = match table.task() {
        Task::Binary => Some(cramers_v(coll, table.labels())?.v),
        Task::Regression => None,
    };
    Ok(HardnessReport {
        num_bags: coll.len(),
        num_instances: coll.num_instances(),
        mean_bag_size: mean_bag_size(coll)?,
        label_prop_stdev: label_prop_stdev(coll)?,
        percentile_sizes,
        sep: sep_stats_fast_l2sq(space, coll)?,
        feature_space: space.mode(),
        label_bias: label_bias(coll)?,
        avg_label_prop: avg_label_prop(coll)?,
        cramers_v: cramers,
    })
}

impl HardnessReport {
    /// Cells in [`CSV_COLUMNS`] order. Undefined values are empty cells.
    pub fn csv_row(&self, dataset_id: &str) -> Vec<String> {
        let pct = |l: u32| self.percentile_sizes.get(&l).map_or(String::new(), |s| s.to_string());
        let ratio = if self.sep.ratio.is_finite() {
            self.sep.ratio.to_string()
        } else {
            "inf".to_string()
        };
        vec![
            dataset_id.to_string(),
            self.num_bags.to_string(),
            self.num_instances.to_string(),
            self.mean_bag_size.to_string(),
            self.label_prop_stdev.to_string(),
            pct(50),
            pct(70),
            pct(85),
            pct(95),
            self.sep.mean_inter.to_string(),
            self.sep.mean_intra.to_string(),
            ratio,
            self.label_bias.to_string(),
            self.avg_label_prop.to_string(),
            self.cramers_v.map_or(String::new(), |v| v.to_string()),
        ]
    }
}
