//! Hardness metrics for bag collections: bag-size distribution, label-proportion
//! spread, bag separation (naive and fast), Cramér's V and the skewed-large-bag share.

mod report;
mod separation;
mod space;

pub use report::{compute_report, HardnessReport, CSV_COLUMNS};
pub use separation::{bag_sep_naive, sep_stats_fast_l2sq, BagSepMatrix, Distance, SepStats};
pub use space::{FeatureSpace, SpaceMode};

use crate::bagging::BagCollection;
use crate::error::{Error, Result};
use crate::ingest::InstanceTable;

pub const PERCENTILE_LEVELS: [u32; 4] = [50, 70, 85, 95];

fn non_empty(coll: &BagCollection) -> Result<()> {
    if coll.is_empty() {
        Err(Error::invalid("metric needs a non-empty bag collection"))
    } else {
        Ok(())
    }
}

/// Population standard deviation of the bag label proportions.
pub fn label_prop_stdev(coll: &BagCollection) -> Result<f64> {
    non_empty(coll)?;
    let props: Vec<f64> = coll.bags.iter().map(|b| b.label_proportion()).collect();
    let n = props.len() as f64;
    let mean = props.iter().sum::<f64>() / n;
    let var = props.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / n;
    Ok(var.sqrt())
}

pub fn mean_bag_size(coll: &BagCollection) -> Result<f64> {
    non_empty(coll)?;
    Ok(coll.num_instances() as f64 / coll.len() as f64)
}

/// Smallest size `s` such that at least `level`% of bags have size `<= s`.
pub fn cumu_bag_size_percentile(coll: &BagCollection, level: u32) -> Result<usize> {
    non_empty(coll)?;
    if level == 0 || level > 100 {
        return Err(Error::invalid(format!("percentile level {level} outside 1..=100")));
    }
    let mut sizes = coll.sizes();
    sizes.sort_unstable();
    let n = sizes.len();
    // smallest k (1-based) with k * 100 >= level * n
    let k = (level as usize * n).div_ceil(100).max(1);
    Ok(sizes[k - 1])
}

pub fn cumu_bag_size_percentiles(coll: &BagCollection, levels: &[u32]) -> Result<Vec<(u32, usize)>> {
    levels
        .iter()
        .map(|&l| Ok((l, cumu_bag_size_percentile(coll, l)?)))
        .collect()
}

/// Fraction of positive labels over all bagged instances, `Σ y_B / Σ |B|`.
pub fn label_bias(coll: &BagCollection) -> Result<f64> {
    non_empty(coll)?;
    let y: f64 = coll.bags.iter().map(|b| b.label_sum()).sum();
    Ok(y / coll.num_instances() as f64)
}

/// Mean of the bag label proportions.
pub fn avg_label_prop(coll: &BagCollection) -> Result<f64> {
    non_empty(coll)?;
    Ok(coll.bags.iter().map(|b| b.label_proportion()).sum::<f64>() / coll.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CramersV {
    pub chi_sq: f64,
    pub v: f64,
}

/// Association between bag membership and a binary label.
pub fn cramers_v(coll: &BagCollection, labels: &[f64]) -> Result<CramersV> {
    if coll.len() < 2 {
        return Err(Error::invalid("Cramér's V needs at least two bags"));
    }
    let mut observed = Vec::with_capacity(coll.len());
    for b in &coll.bags {
        let mut row = [0.0; 2];
        for &i in b.members() {
            match labels.get(i) {
                Some(&y) if y == 0.0 => row[0] += 1.0,
                Some(&y) if y == 1.0 => row[1] += 1.0,
                Some(y) => return Err(Error::invalid(format!("label {y} of instance {i} is not binary"))),
                None => return Err(Error::invalid(format!("instance {i} has no label"))),
            }
        }
        observed.push(row);
    }
    cramers_v_from_table(&observed)
}

/// Cramér's V of an r×2 contingency table of counts.
pub fn cramers_v_from_table(observed: &[[f64; 2]]) -> Result<CramersV> {
    let r = observed.len();
    if r < 2 {
        return Err(Error::invalid("contingency table needs at least two rows"));
    }
    if observed.iter().flatten().any(|&o| !(o >= 0.0)) {
        return Err(Error::invalid("contingency counts must be non-negative"));
    }
    let row_tot: Vec<f64> = observed.iter().map(|r| r[0] + r[1]).collect();
    let col_tot = [
        observed.iter().map(|r| r[0]).sum::<f64>(),
        observed.iter().map(|r| r[1]).sum::<f64>(),
    ];
    let n = col_tot[0] + col_tot[1];
    if n == 0.0 {
        return Err(Error::invalid("contingency table is empty"));
    }
    if col_tot[0] == 0.0 || col_tot[1] == 0.0 {
        return Ok(CramersV { chi_sq: 0.0, v: 0.0 });
    }
    let mut chi_sq = 0.0;
    for (row, &rt) in observed.iter().zip(&row_tot) {
        for j in 0..2 {
            let e = rt * col_tot[j] / n;
            if e > 0.0 {
                chi_sq += (row[j] - e) * (row[j] - e) / e;
            }
        }
    }
    let denom = ((r - 1).min(1)) as f64;
    let v = ((chi_sq / n) / denom).sqrt().min(1.0);
    Ok(CramersV { chi_sq, v })
}

/// Fraction of all table instances in bags larger than `high` whose label proportion
/// is below `eps` or above `1 - eps`.
pub fn skewed_large_bag_fraction(
    table: &InstanceTable,
    unfiltered: &BagCollection,
    high: usize,
    eps: f64,
) -> Result<f64> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::invalid(format!("eps must lie in (0, 0.5), got {eps}")));
    }
    if table.is_empty() {
        return Err(Error::EmptyTable("skewed-bag fraction of an empty table".into()));
    }
    let skewed: usize = unfiltered
        .bags
        .iter()
        .filter(|b| {
            let p = b.label_proportion();
            b.len() > high && (p < eps || p > 1.0 - eps)
        })
        .map(|b| b.len())
        .sum();
    Ok(skewed as f64 / table.len() as f64)
}
