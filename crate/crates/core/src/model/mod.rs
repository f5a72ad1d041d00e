//! Two-hidden-layer ReLU MLP over sparse multihot inputs, with hand-written
//! backpropagation, Adam and a binary checkpoint format.

mod adam;
mod checkpoint;

pub use adam::{adam_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointHeader};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{InstanceTable, Task};

/// Logits are clamped to this magnitude before the sigmoid.
pub const LOGIT_CLAMP: f64 = 30.0;

pub fn sigmoid(z: f64) -> f64 {
    let z = z.clamp(-LOGIT_CLAMP, LOGIT_CLAMP);
    1.0 / (1.0 + (-z).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    Sigmoid,
    Identity,
}

impl Head {
    pub fn for_task(task: Task) -> Self {
        match task {
            Task::Binary => Head::Sigmoid,
            Task::Regression => Head::Identity,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelShape {
    pub input_dim: usize,
    pub h1: usize,
    pub h2: usize,
}

impl ModelShape {
    pub const H1: usize = 128;
    pub const H2: usize = 64;

    pub fn new(input_dim: usize) -> Self {
        ModelShape { input_dim, h1: Self::H1, h2: Self::H2 }
    }

    pub fn for_table(table: &InstanceTable) -> Self {
        Self::new(table.vocab_sizes().iter().sum::<usize>() + table.n_num())
    }

    pub fn num_params(&self) -> usize {
        self.input_dim * self.h1 + self.h1 + self.h2 * self.h1 + self.h2 + self.h2 + 1
    }

    // offsets of W1, b1, W2, b2, w_out, b_out in the flat vector
    fn offsets(&self) -> [usize; 6] {
        let w1 = 0;
        let b1 = w1 + self.input_dim * self.h1;
        let w2 = b1 + self.h1;
        let b2 = w2 + self.h2 * self.h1;
        let wo = b2 + self.h2;
        let bo = wo + self.h2;
        [w1, b1, w2, b2, wo, bo]
    }
}

/// Parameters in one flat vector. `W1` is stored input-major (`D × h1`) so a sparse
/// input touches contiguous rows; `W2` is `h2 × h1` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    shape: ModelShape,
    data: Vec<f64>,
}

/// Immutable views of the parameter blocks.
pub struct Blocks<'a> {
    pub w1: &'a [f64],
    pub b1: &'a [f64],
    pub w2: &'a [f64],
    pub b2: &'a [f64],
    pub w_out: &'a [f64],
    pub b_out: f64,
}

impl ModelParams {
    pub fn zeros(shape: ModelShape) -> Self {
        ModelParams { shape, data: vec![0.0; shape.num_params()] }
    }

    /// He-uniform weights (limit `sqrt(6 / fan_in)`), zero biases.
    pub fn init(shape: ModelShape, seed: u64) -> Self {
        let mut p = Self::zeros(shape);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [w1, b1, w2, b2, wo, bo] = shape.offsets();
        let fill = |rng: &mut ChaCha8Rng, dst: &mut [f64], fan_in: usize| {
            let limit = (6.0 / fan_in.max(1) as f64).sqrt();
            for v in dst {
                *v = rng.random_range(-limit..limit);
            }
        };
        fill(&mut rng, &mut p.data[w1..b1], shape.input_dim);
        fill(&mut rng, &mut p.data[w2..b2], shape.h1);
        fill(&mut rng, &mut p.data[wo..bo], shape.h2);
        p
    }

    pub fn from_vec(shape: ModelShape, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.num_params() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                shape.num_params(),
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite parameter".into()));
        }
        Ok(ModelParams { shape, data })
    }

    pub fn shape(&self) -> ModelShape {
        self.shape
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn blocks(&self) -> Blocks<'_> {
        let [w1, b1, w2, b2, wo, bo] = self.shape.offsets();
        Blocks {
            w1: &self.data[w1..b1],
            b1: &self.data[b1..w2],
            w2: &self.data[w2..b2],
            b2: &self.data[b2..wo],
            w_out: &self.data[wo..bo],
            b_out: self.data[bo],
        }
    }
}

/// Sparse input vector: strictly increasing indices with their values.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseInput {
    pub indices: Vec<u32>,
    pub values: Vec<f64>,
}

impl SparseInput {
    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        for (&j, &v) in self.indices.iter().zip(&self.values) {
            out[j as usize] = v;
        }
        out
    }
}

/// One-hot block per categorical column (at the column's offset plus the code),
/// followed by the numerical values.
pub fn multihot_encode(codes: &[u32], vocab_sizes: &[usize], nums: &[f64]) -> Result<SparseInput> {
    if codes.len() != vocab_sizes.len() {
        return Err(Error::invalid("one code per categorical column required"));
    }
    let mut indices = Vec::with_capacity(codes.len() + nums.len());
    let mut values = Vec::with_capacity(codes.len() + nums.len());
    let mut offset = 0usize;
    for (c, (&code, &size)) in codes.iter().zip(vocab_sizes).enumerate() {
        if code as usize >= size {
            return Err(Error::invalid(format!(
                "column {c}: code {code} outside vocabulary of size {size}"
            )));
        }
        indices.push((offset + code as usize) as u32);
        values.push(1.0);
        offset += size;
    }
    for (k, &v) in nums.iter().enumerate() {
        indices.push((offset + k) as u32);
        values.push(v);
    }
    Ok(SparseInput { indices, values })
}

/// Multihot inputs for every row of `table`.
pub fn encode_table(table: &InstanceTable) -> Vec<SparseInput> {
    (0..table.len())
        .map(|i| {
            multihot_encode(table.cat_row(i), table.vocab_sizes(), table.num_row(i))
                .expect("table codes are validated against vocab sizes")
        })
        .collect()
}

/// Per-instance intermediate values of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub z1: Vec<f64>,
    pub a1: Vec<f64>,
    pub z2: Vec<f64>,
    pub a2: Vec<f64>,
    pub logits: Vec<f64>,
    pub head: Head,
}

pub fn forward(params: &ModelParams, batch: &[&SparseInput], head: Head) -> (Vec<f64>, ForwardCache) {
    let s = params.shape;
    let b = params.blocks();
    let n = batch.len();
    let mut z1 = vec![0.0; n * s.h1];
    let mut z2 = vec![0.0; n * s.h2];
    let mut logits = vec![0.0; n];
    for (r, x) in batch.iter().enumerate() {
        let zr = &mut z1[r * s.h1..(r + 1) * s.h1];
        zr.copy_from_slice(b.b1);
        for (&j, &v) in x.indices.iter().zip(&x.values) {
            let row = &b.w1[j as usize * s.h1..(j as usize + 1) * s.h1];
            for (z, w) in zr.iter_mut().zip(row) {
                *z += v * w;
            }
        }
    }
    let a1: Vec<f64> = z1.iter().map(|&z| z.max(0.0)).collect();
    for r in 0..n {
        let ar = &a1[r * s.h1..(r + 1) * s.h1];
        for k in 0..s.h2 {
            let row = &b.w2[k * s.h1..(k + 1) * s.h1];
            z2[r * s.h2 + k] = b.b2[k] + row.iter().zip(ar).map(|(w, a)| w * a).sum::<f64>();
        }
    }
    let a2: Vec<f64> = z2.iter().map(|&z| z.max(0.0)).collect();
    for r in 0..n {
        let ar = &a2[r * s.h2..(r + 1) * s.h2];
        logits[r] = b.b_out + b.w_out.iter().zip(ar).map(|(w, a)| w * a).sum::<f64>();
    }
    let preds = match head {
        Head::Sigmoid => logits.iter().map(|&z| sigmoid(z)).collect(),
        Head::Identity => logits.clone(),
    };
    (preds, ForwardCache { z1, a1, z2, a2, logits, head })
}

/// Sign pattern of every hidden pre-activation plus the clamp state of each logit.
/// Parameter perturbations that keep this pattern fixed stay on one smooth piece.
pub fn activation_pattern(params: &ModelParams, batch: &[&SparseInput]) -> Vec<bool> {
    let (_, c) = forward(params, batch, Head::Identity);
    c.z1.iter()
        .chain(&c.z2)
        .map(|&z| z > 0.0)
        .chain(c.logits.iter().map(|&z| z.abs() < LOGIT_CLAMP))
        .collect()
}

/// Predictions only.
pub fn predict(params: &ModelParams, inputs: &[&SparseInput], head: Head) -> Vec<f64> {
    forward(params, inputs, head).0
}

/// What the upstream gradient is taken with respect to.
#[derive(Debug, Clone, Copy)]
pub enum GradTarget<'a> {
    Predictions(&'a [f64]),
    Logits(&'a [f64]),
}

/// Parameter gradient (same flat layout as [`ModelParams`]) for the batch and cache
/// of a matching [`forward`] call.
pub fn backward(
    params: &ModelParams,
    batch: &[&SparseInput],
    cache: &ForwardCache,
    upstream: GradTarget<'_>,
) -> Vec<f64> {
    let s = params.shape;
    let b = params.blocks();
    let n = batch.len();
    let d_logit: Vec<f64> = match upstream {
        GradTarget::Logits(g) => g.to_vec(),
        GradTarget::Predictions(g) => match cache.head {
            Head::Identity => g.to_vec(),
            Head::Sigmoid => g
                .iter()
                .zip(&cache.logits)
                .map(|(&gp, &z)| {
                    if z.abs() < LOGIT_CLAMP {
                        let p = sigmoid(z);
                        gp * p * (1.0 - p)
                    } else {
                        0.0
                    }
                })
                .collect(),
        },
    };
    let mut grad = vec![0.0; s.num_params()];
    let [w1o, b1o, w2o, b2o, woo, boo] = s.offsets();
    let mut dz2 = vec![0.0; s.h2];
    let mut dz1 = vec![0.0; s.h1];
    for r in 0..n {
        let dl = d_logit[r];
        if dl == 0.0 {
            continue;
        }
        let a2 = &cache.a2[r * s.h2..(r + 1) * s.h2];
        let z2 = &cache.z2[r * s.h2..(r + 1) * s.h2];
        grad[boo] += dl;
        for k in 0..s.h2 {
            grad[woo + k] += dl * a2[k];
            dz2[k] = if z2[k] > 0.0 { dl * b.w_out[k] } else { 0.0 };
        }
        let a1 = &cache.a1[r * s.h1..(r + 1) * s.h1];
        let z1 = &cache.z1[r * s.h1..(r + 1) * s.h1];
        dz1.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..s.h2 {
            let d = dz2[k];
            if d == 0.0 {
                continue;
            }
            grad[b2o + k] += d;
            let gw = &mut grad[w2o + k * s.h1..w2o + (k + 1) * s.h1];
            let w = &b.w2[k * s.h1..(k + 1) * s.h1];
            for h in 0..s.h1 {
                gw[h] += d * a1[h];
                dz1[h] += d * w[h];
            }
        }
        for h in 0..s.h1 {
            if z1[h] <= 0.0 {
                dz1[h] = 0.0;
            }
        }
        for h in 0..s.h1 {
            grad[b1o + h] += dz1[h];
        }
        for (&j, &v) in batch[r].indices.iter().zip(&batch[r].values) {
            let gw = &mut grad[w1o + j as usize * s.h1..w1o + (j as usize + 1) * s.h1];
            for h in 0..s.h1 {
                gw[h] += v * dz1[h];
            }
        }
    }
    grad
}
