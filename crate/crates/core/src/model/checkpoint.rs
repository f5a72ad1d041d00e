use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{Head, ModelParams, ModelShape};
use crate::error::{Error, Result};

/// JSON line preceding the little-endian f64 parameter block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub shape: ModelShape,
    pub head: Head,
    pub seed: u64,
    pub step: u64,
    pub num_params: usize,
}

pub fn write_checkpoint<W: Write>(
    out: &mut W,
    params: &ModelParams,
    head: Head,
    seed: u64,
    step: u64,
) -> Result<()> {
    let header = CheckpointHeader {
        shape: params.shape(),
        head,
        seed,
        step,
        num_params: params.as_slice().len(),
    };
    let io = |e| Error::io("<checkpoint>", e);
    serde_json::to_writer(&mut *out, &header)?;
    out.write_all(b"\n").map_err(io)?;
    let mut bytes = Vec::with_capacity(8 * header.num_params);
    for v in params.as_slice() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    out.write_all(&bytes).map_err(io)
}

pub fn read_checkpoint<R: BufRead>(input: &mut R) -> Result<(CheckpointHeader, ModelParams)> {
    let io = |e| Error::io("<checkpoint>", e);
    let mut line = String::new();
    input.read_line(&mut line).map_err(io)?;
    let header: CheckpointHeader = serde_json::from_str(line.trim_end())?;
    if header.num_params != header.shape.num_params() {
        return Err(Error::Validation("checkpoint parameter count disagrees with shape".into()));
    }
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes).map_err(io)?;
    if bytes.len() != 8 * header.num_params {
        return Err(Error::Validation(format!(
            "checkpoint holds {} bytes of parameters, expected {}",
            bytes.len(),
            8 * header.num_params
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    let params = ModelParams::from_vec(header.shape, data)?;
    Ok((header, params))
}
