use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::derive_seed;
use crate::bagging::{
    fixed_size_feature_bags_subset, group_subset_by_key, random_fixed_bags_subset, singleton_bags,
    BagCollection, Provenance,
};
use crate::error::{Error, Result};
use crate::ingest::InstanceTable;

pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fold {
    pub index: usize,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub train_bags: BagCollection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    /// Members of the filtered collection, sorted.
    pub retained: Vec<usize>,
    pub folds: Vec<Fold>,
}

/// Rebuilds training bags over `train` the same way `provenance` built the original
/// collection. Random re-bagging in fold `fold` uses a seed derived from the original.
pub fn rebag(
    table: &InstanceTable,
    provenance: &Provenance,
    train: &[usize],
    fold: usize,
) -> Result<BagCollection> {
    match provenance {
        Provenance::Feature { key } => group_subset_by_key(table, key, train),
        Provenance::Random { q, seed } => {
            random_fixed_bags_subset(table, train, *q, derive_seed(*seed, fold as u64))
        }
        Provenance::FixedFeature { key, q, seed } => {
            fixed_size_feature_bags_subset(table, key, train, *q, derive_seed(*seed, fold as u64))
        }
        Provenance::Singleton => singleton_bags(table, train),
    }
}

/// Shuffles the retained instances into `k` folds whose sizes differ by at most one,
/// and rebuilds each fold's training bags from its training instances.
pub fn k_fold_split(table: &InstanceTable, coll: &BagCollection, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::invalid("need at least two folds"));
    }
    let retained = coll.instances();
    if retained.len() < k {
        return Err(Error::invalid(format!(
            "{} retained instances cannot fill {k} folds",
            retained.len()
        )));
    }
    let mut order = retained.clone();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let m = order.len();
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let size = m / k + usize::from(f < m % k);
        let mut test = order[start..start + size].to_vec();
        test.sort_unstable();
        let mut train: Vec<usize> = order[..start].iter().chain(&order[start + size..]).copied().collect();
        train.sort_unstable();
        let train_bags = rebag(table, &coll.provenance, &train, f)?;
        folds.push(Fold { index: f, train, test, train_bags });
        start += size;
    }
    let plan = FoldPlan { retained, folds };
    plan.check_invariants()?;
    Ok(plan)
}

pub fn five_fold_split(table: &InstanceTable, coll: &BagCollection, seed: u64) -> Result<FoldPlan> {
    k_fold_split(table, coll, DEFAULT_FOLDS, seed)
}

impl FoldPlan {
    /// Disjoint test sets covering the retained instances; per fold, train and test
    /// partition the retained set and every train bag lies inside train.
    pub fn check_invariants(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Validation(msg));
        let mut all_test: Vec<usize> = self.folds.iter().flat_map(|f| f.test.iter().copied()).collect();
        all_test.sort_unstable();
        if all_test != self.retained {
            return fail("test sets do not partition the retained instances".into());
        }
        for f in &self.folds {
            let mut union: Vec<usize> = f.train.iter().chain(&f.test).copied().collect();
            union.sort_unstable();
            if union != self.retained {
                return fail(format!("fold {}: train and test do not partition the retained set", f.index));
            }
            f.train_bags.check_disjoint()?;
            for b in &f.train_bags.bags {
                if b.members().iter().any(|i| f.train.binary_search(i).is_err()) {
                    return fail(format!("fold {}: a train bag contains a non-train instance", f.index));
                }
            }
        }
        Ok(())
    }
}
