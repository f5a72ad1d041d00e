//! Bag construction (feature grouping, random fixed-size, fixed-size feature bags)
//! and the bag-level / dataset-level filters.

mod file;

pub use file::{read_bag_file, write_bag_file, BagFileHeader, BagRecord};

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::InstanceTable;

/// Bags smaller than this are dropped by the default bag filter.
pub const DEFAULT_LOW_THRESH: usize = 50;
/// Bags larger than this are dropped by the default bag filter.
pub const DEFAULT_HIGH_THRESH: usize = 2500;
/// Datasets retaining less than this fraction of instances after filtering are dropped.
pub const DEFAULT_MIN_RETAIN: f64 = 0.30;

/// Ordered set of categorical column indices defining feature bags.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GroupingKey(Vec<usize>);

impl GroupingKey {
    pub const MAX_LEN: usize = 3;

    pub fn new(columns: Vec<usize>) -> Result<Self> {
        if columns.is_empty() || columns.len() > Self::MAX_LEN {
            return Err(Error::invalid(format!(
                "grouping key must have 1..={} columns, got {}",
                Self::MAX_LEN,
                columns.len()
            )));
        }
        for (i, c) in columns.iter().enumerate() {
            if columns[..i].contains(c) {
                return Err(Error::invalid(format!("grouping key repeats column {c}")));
            }
        }
        Ok(GroupingKey(columns))
    }

    pub fn columns(&self) -> &[usize] {
        &self.0
    }

    pub fn validate_for(&self, table: &InstanceTable) -> Result<()> {
        match self.0.iter().find(|&&c| c >= table.n_cat()) {
            Some(c) => Err(Error::invalid(format!(
                "grouping key column {c} out of range for {} categorical columns",
                table.n_cat()
            ))),
            None => Ok(()),
        }
    }

    /// Resolves comma-separated categorical column names (e.g. `C3,C11`).
    pub fn parse_names(spec: &str, table: &InstanceTable) -> Result<Self> {
        let cols = spec
            .split(',')
            .map(|name| {
                let name = name.trim();
                table
                    .cat_index(name)
                    .ok_or_else(|| Error::invalid(format!("no categorical column named {name:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        GroupingKey::new(cols)
    }

    /// Human-readable name built from the table's column names, joined by `-`.
    pub fn display_name(&self, table: &InstanceTable) -> String {
        self.0
            .iter()
            .map(|&c| table.cat_names()[c].as_str())
            .collect::<Vec<_>>()
            .join("-")
    }

    fn tuple(&self, table: &InstanceTable, i: usize) -> Vec<u32> {
        self.0.iter().map(|&c| table.code(i, c)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bag {
    members: Vec<usize>,
    label_sum: f64,
}

impl Bag {
    /// Builds a bag over `members` (sorted here) with its label sum taken from `table`.
    pub fn from_members(mut members: Vec<usize>, table: &InstanceTable) -> Result<Self> {
        members.sort_unstable();
        Self::from_sorted(members, table.labels())
    }

    pub(crate) fn from_sorted(members: Vec<usize>, labels: &[f64]) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::invalid("bag must be non-empty"));
        }
        if members.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("bag members must be strictly increasing"));
        }
        if let Some(&last) = members.last() {
            if last >= labels.len() {
                return Err(Error::invalid(format!("bag member {last} out of range")));
            }
        }
        let label_sum = members.iter().map(|&i| labels[i]).sum();
        Ok(Bag { members, label_sum })
    }

    /// Bag with an explicitly given label sum (used when reading bag files).
    pub fn with_label_sum(members: Vec<usize>, label_sum: f64) -> Result<Self> {
        if members.is_empty() || members.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("bag members must be non-empty and strictly increasing"));
        }
        Ok(Bag { members, label_sum })
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn label_sum(&self) -> f64 {
        self.label_sum
    }

    /// `y_B / |B|`.
    pub fn label_proportion(&self) -> f64 {
        self.label_sum / self.members.len() as f64
    }
}

/// How a bag collection was built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Feature { key: GroupingKey },
    Random { q: usize, seed: u64 },
    FixedFeature { key: GroupingKey, q: usize, seed: u64 },
    /// One bag per instance, for instance-level reference training.
    Singleton,
}

/// Thresholds applied by [`filter_bags`]; `high = None` means unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterRecord {
    pub low: usize,
    pub high: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BagCollection {
    pub bags: Vec<Bag>,
    pub provenance: Provenance,
    pub filter: Option<FilterRecord>,
}

impl BagCollection {
    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    pub fn num_instances(&self) -> usize {
        self.bags.iter().map(Bag::len).sum()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.bags.iter().map(Bag::len).collect()
    }

    /// All member indices, sorted.
    pub fn instances(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.bags.iter().flat_map(|b| b.members().iter().copied()).collect();
        all.sort_unstable();
        all
    }

    /// Checks that no instance appears in two bags.
    pub fn check_disjoint(&self) -> Result<()> {
        let all = self.instances();
        match all.windows(2).find(|w| w[0] == w[1]) {
            Some(w) => Err(Error::Validation(format!("instance {} occurs in two bags", w[0]))),
            None => Ok(()),
        }
    }
}

fn chacha(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Groups all instances of `table` by the codes of `key`'s columns.
pub fn group_by_key(table: &InstanceTable, key: &GroupingKey) -> Result<BagCollection> {
    let all: Vec<usize> = (0..table.len()).collect();
    group_subset_by_key(table, key, &all)
}

/// Groups the instances in `subset` by `key`; bags are ordered by key tuple.
pub fn group_subset_by_key(
    table: &InstanceTable,
    key: &GroupingKey,
    subset: &[usize],
) -> Result<BagCollection> {
    key.validate_for(table)?;
    let mut groups: BTreeMap<Vec<u32>, Vec<usize>> = BTreeMap::new();
    for &i in subset {
        groups.entry(key.tuple(table, i)).or_default().push(i);
    }
    let bags = groups
        .into_values()
        .map(|members| Bag::from_members(members, table))
        .collect::<Result<Vec<_>>>()?;
    Ok(BagCollection {
        bags,
        provenance: Provenance::Feature { key: key.clone() },
        filter: None,
    })
}

/// Shuffles all instances with `seed` and cuts consecutive runs of `q`; the remainder
/// of `m mod q` instances is dropped.
pub fn random_fixed_bags(table: &InstanceTable, q: usize, seed: u64) -> Result<BagCollection> {
    let all: Vec<usize> = (0..table.len()).collect();
    random_fixed_bags_subset(table, &all, q, seed)
}

pub fn random_fixed_bags_subset(
    table: &InstanceTable,
    subset: &[usize],
    q: usize,
    seed: u64,
) -> Result<BagCollection> {
    check_q(q, subset.len())?;
    let mut order = subset.to_vec();
    order.shuffle(&mut chacha(seed));
    Ok(BagCollection {
        bags: cut_segments(&order, q, table)?,
        provenance: Provenance::Random { q, seed },
        filter: None,
    })
}

/// Random order in which instances sharing a key tuple are contiguous (groups shuffled,
/// members shuffled within groups), cut into consecutive segments of `q`.
pub fn fixed_size_feature_bags(
    table: &InstanceTable,
    key: &GroupingKey,
    q: usize,
    seed: u64,
) -> Result<BagCollection> {
    let all: Vec<usize> = (0..table.len()).collect();
    fixed_size_feature_bags_subset(table, key, &all, q, seed)
}

pub fn fixed_size_feature_bags_subset(
    table: &InstanceTable,
    key: &GroupingKey,
    subset: &[usize],
    q: usize,
    seed: u64,
) -> Result<BagCollection> {
    check_q(q, subset.len())?;
    let grouped = group_subset_by_key(table, key, subset)?;
    let mut rng = chacha(seed);
    let mut groups: Vec<Vec<usize>> = grouped.bags.into_iter().map(|b| b.members).collect();
    groups.shuffle(&mut rng);
    let mut order = Vec::with_capacity(subset.len());
    for mut g in groups {
        g.shuffle(&mut rng);
        order.extend(g);
    }
    Ok(BagCollection {
        bags: cut_segments(&order, q, table)?,
        provenance: Provenance::FixedFeature {
            key: key.clone(),
            q,
            seed,
        },
        filter: None,
    })
}

/// One bag per instance of `subset`.
pub fn singleton_bags(table: &InstanceTable, subset: &[usize]) -> Result<BagCollection> {
    let bags = subset
        .iter()
        .map(|&i| Bag::from_sorted(vec![i], table.labels()))
        .collect::<Result<Vec<_>>>()?;
    Ok(BagCollection {
        bags,
        provenance: Provenance::Singleton,
        filter: None,
    })
}

fn check_q(q: usize, m: usize) -> Result<()> {
    if q == 0 {
        return Err(Error::invalid("bag size must be at least 1"));
    }
    if q > m {
        return Err(Error::invalid(format!("bag size {q} exceeds instance count {m}")));
    }
    Ok(())
}

fn cut_segments(order: &[usize], q: usize, table: &InstanceTable) -> Result<Vec<Bag>> {
    order
        .chunks_exact(q)
        .map(|seg| Bag::from_members(seg.to_vec(), table))
        .collect()
}

/// Keeps bags with `low <= |B| <= high` (both bounds inclusive).
pub fn filter_bags(coll: &BagCollection, low: usize, high: Option<usize>) -> Result<BagCollection> {
    if let Some(h) = high {
        if low > h {
            return Err(Error::invalid(format!("low threshold {low} exceeds high threshold {h}")));
        }
    }
    let bags = coll
        .bags
        .iter()
        .filter(|b| b.len() >= low && high.is_none_or(|h| b.len() <= h))
        .cloned()
        .collect();
    Ok(BagCollection {
        bags,
        provenance: coll.provenance.clone(),
        filter: Some(FilterRecord { low, high }),
    })
}

/// Fraction of the table's instances that remain in some bag of `coll`.
pub fn retained_instance_fraction(coll: &BagCollection, table: &InstanceTable) -> f64 {
    if table.is_empty() {
        return 0.0;
    }
    coll.num_instances() as f64 / table.len() as f64
}

/// Whether a filtered dataset keeps at least `min_retain` of the instances.
pub fn passes_dataset_filter(coll: &BagCollection, table: &InstanceTable, min_retain: f64) -> bool {
    retained_instance_fraction(coll, table) >= min_retain
}

/// All grouping keys of size `1..=max_size` over `n_cat` columns: every size-1 key,
/// then size-2, then size-3, each block in lexicographic order.
pub fn enumerate_candidate_keys(n_cat: usize, max_size: usize) -> Result<Vec<GroupingKey>> {
    if n_cat == 0 {
        return Err(Error::invalid("need at least one categorical column"));
    }
    if max_size == 0 || max_size > GroupingKey::MAX_LEN {
        return Err(Error::invalid(format!(
            "key size must be within 1..={}",
            GroupingKey::MAX_LEN
        )));
    }
    let mut keys = Vec::new();
    for size in 1..=max_size {
        let mut combo: Vec<usize> = (0..size).collect();
        if size > n_cat {
            break;
        }
        loop {
            keys.push(GroupingKey(combo.clone()));
            // advance to the next combination in lexicographic order
            let mut i = size;
            while i > 0 && combo[i - 1] == n_cat - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            combo[i - 1] += 1;
            for j in i..size {
                combo[j] = combo[j - 1] + 1;
            }
        }
    }
    Ok(keys)
}

#[cfg(test)]
mod tests;
