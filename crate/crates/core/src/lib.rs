//! Toolkit for learning-from-label-proportions (LLP) benchmarks on tabular data.
//!
//! The pipeline runs: [`ingest`] raw CSV into an encoded table, build bag collections
//! with [`bagging`], score their hardness with [`metrics`], group datasets with
//! [`characterize`], and train the multihot MLP of [`model`] with the bag-level
//! methods in [`losses`] through the [`harness`].

pub mod bagging;
pub mod characterize;
pub mod cli;
pub mod error;
pub mod fingerprint;
pub mod gradcheck;
pub mod harness;
pub mod ingest;
pub mod losses;
pub mod metrics;
pub mod model;
pub mod synth;

pub use error::{Error, Result};

#[cfg(test)]
mod testutil;
