//! Bag-respecting k-fold splits, the minibatch training loop with early stopping,
//! the instance-level reference run, and evaluation metrics.

mod eval;
mod folds;
mod train;

pub use eval::{accuracy, auc, mse};
pub use folds::{five_fold_split, k_fold_split, rebag, Fold, FoldPlan, DEFAULT_FOLDS};
pub use train::{
    epoch_batches, evaluate, instance_level_train, train, EpochRecord, EvalSummary, Monitor, Phase,
    TrainConfig, TrainOutcome, TrainRun,
};

/// Mixes a base seed with a stream tag (SplitMix64 finalizer) to get independent
/// generator seeds for folds, batching and re-bagging.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
