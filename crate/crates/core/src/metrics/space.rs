use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::InstanceTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceMode {
    /// One-hot block per categorical column, then numericals min-max scaled to [0, 1].
    Multihot,
    /// Numerical columns only, unscaled.
    RawNumeric,
    /// Caller-supplied dense vectors.
    Dense,
}

/// Instance vectors stored row-wise in compressed sparse form.
#[derive(Debug, Clone)]
pub struct FeatureSpace {
    mode: SpaceMode,
    dim: usize,
    offsets: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl FeatureSpace {
    pub fn multihot(table: &InstanceTable) -> Self {
        let mut block = Vec::with_capacity(table.n_cat());
        let mut dim = 0usize;
        for &s in table.vocab_sizes() {
            block.push(dim);
            dim += s;
        }
        let num_start = dim;
        dim += table.n_num();
        let ranges: Vec<(f64, f64)> = (0..table.n_num())
            .map(|c| {
                table
                    .num_column(c)
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
            })
            .collect();
        let mut b = Builder::new(SpaceMode::Multihot, dim, table.len());
        for i in 0..table.len() {
            for (c, &code) in table.cat_row(i).iter().enumerate() {
                b.push(block[c] + code as usize, 1.0);
            }
            for (c, &v) in table.num_row(i).iter().enumerate() {
                let (lo, hi) = ranges[c];
                let scaled = if hi > lo { (v - lo) / (hi - lo) } else { 0.0 };
                b.push(num_start + c, scaled);
            }
            b.end_row();
        }
        b.finish()
    }

    pub fn raw_numeric(table: &InstanceTable) -> Result<Self> {
        if table.n_num() == 0 {
            return Err(Error::invalid("raw numeric space needs at least one numerical column"));
        }
        let mut b = Builder::new(SpaceMode::RawNumeric, table.n_num(), table.len());
        for i in 0..table.len() {
            for (c, &v) in table.num_row(i).iter().enumerate() {
                b.push(c, v);
            }
            b.end_row();
        }
        Ok(b.finish())
    }

    /// All rows must share one length.
    pub fn dense(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        let mut b = Builder::new(SpaceMode::Dense, dim, rows.len());
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::invalid(format!("row {i} has length {}, expected {dim}", r.len())));
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("row {i} has a non-finite value")));
            }
            for (j, &v) in r.iter().enumerate() {
                b.push(j, v);
            }
            b.end_row();
        }
        Ok(b.finish())
    }

    pub fn mode(&self) -> SpaceMode {
        self.mode
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Non-zero pattern of row `i` as (indices, values).
    pub fn row(&self, i: usize) -> (&[u32], &[f64]) {
        let (a, b) = (self.offsets[i], self.offsets[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        let (idx, val) = self.row(i);
        for (&j, &v) in idx.iter().zip(val) {
            out[j as usize] += v;
        }
        out
    }

    pub fn sq_norm(&self, i: usize) -> f64 {
        self.row(i).1.iter().map(|v| v * v).sum()
    }
}

struct Builder {
    mode: SpaceMode,
    dim: usize,
    offsets: Vec<usize>,
    indices: Vec<u32>,
    values: Vec<f64>,
}

impl Builder {
    fn new(mode: SpaceMode, dim: usize, rows: usize) -> Self {
        let mut offsets = Vec::with_capacity(rows + 1);
        offsets.push(0);
        Builder { mode, dim, offsets, indices: Vec::new(), values: Vec::new() }
    }

    fn push(&mut self, j: usize, v: f64) {
        if v != 0.0 {
            self.indices.push(j as u32);
            self.values.push(v);
        }
    }

    fn end_row(&mut self) {
        self.offsets.push(self.indices.len());
    }

    fn finish(self) -> FeatureSpace {
        FeatureSpace {
            mode: self.mode,
            dim: self.dim,
            offsets: self.offsets,
            indices: self.indices,
            values: self.values,
        }
    }
}
