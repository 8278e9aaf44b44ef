//! Binary checkpoints.
//!
//! Layout: the magic bytes `DRNNCKPT`, a little-endian `u32` format version,
//! a little-endian `u64` header length, the JSON header (configuration,
//! vocabulary hash, concatenation order, tensor names and lengths), then
//! every tensor as little-endian `f64` in declaration order.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ModelConfig, ModelParams, CONCAT_ORDER};
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"DRNNCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub config: ModelConfig,
    pub vocab_hash: String,
    pub vocab_sizes: [usize; 4],
    pub concat_order: String,
    pub tensors: Vec<TensorEntry>,
}

pub fn encode(config: &ModelConfig, vocab: &Vocabulary, params: &ModelParams) -> Result<Vec<u8>> {
    params.check_shapes(config, vocab.sizes())?;
    let slices = params.all_slices();
    let header = CheckpointHeader {
        config: config.clone(),
        vocab_hash: vocab.hash(),
        vocab_sizes: vocab.sizes(),
        concat_order: CONCAT_ORDER.to_string(),
        tensors: slices
            .iter()
            .map(|(name, s)| TensorEntry {
                name: name.clone(),
                len: s.len(),
            })
            .collect(),
    };
    let header = serde_json::to_vec(&header)?;
    let total: usize = slices.iter().map(|(_, s)| s.len()).sum();
    let mut out = Vec::with_capacity(20 + header.len() + 8 * total);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(header.len() as u64).to_le_bytes());
    out.extend_from_slice(&header);
    for (_, s) in slices {
        for v in s {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

fn take<'a>(bytes: &mut &'a [u8], n: usize) -> std::result::Result<&'a [u8], String> {
    if bytes.len() < n {
        return Err("truncated checkpoint".into());
    }
    let (head, rest) = bytes.split_at(n);
    *bytes = rest;
    Ok(head)
}

pub fn read_header(mut bytes: &[u8]) -> std::result::Result<(CheckpointHeader, &[u8]), String> {
    if take(&mut bytes, 8)? != MAGIC {
        return Err("not a checkpoint (bad magic)".into());
    }
    let version = u32::from_le_bytes(take(&mut bytes, 4)?.try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(format!("unsupported format version {version}"));
    }
    let len = u64::from_le_bytes(take(&mut bytes, 8)?.try_into().expect("8 bytes")) as usize;
    let header: CheckpointHeader =
        serde_json::from_slice(take(&mut bytes, len)?).map_err(|e| format!("bad header: {e}"))?;
    Ok((header, bytes))
}

/// Decode a checkpoint, rejecting a vocabulary whose hash differs from the
/// one it was trained with, or a configuration other than `expected`.
pub fn decode(
    bytes: &[u8],
    vocab: &Vocabulary,
    expected: Option<&ModelConfig>,
) -> std::result::Result<(ModelConfig, ModelParams), String> {
    let (header, mut data) = read_header(bytes)?;
    if header.vocab_hash != vocab.hash() {
        return Err("vocabulary hash does not match the checkpoint".into());
    }
    if let Some(expected) = expected {
        if *expected != header.config {
            return Err("model configuration does not match the checkpoint".into());
        }
    }
    if header.concat_order != CONCAT_ORDER {
        return Err(format!("unknown concatenation order `{}`", header.concat_order));
    }
    let config = header.config;
    config.validate().map_err(|e| e.to_string())?;
    let mut params = ModelParams::init(&config, vocab.sizes(), &mut ChaCha8Rng::seed_from_u64(0))
        .map_err(|e| e.to_string())?;
    let layout: Vec<TensorEntry> = params
        .all_slices()
        .iter()
        .map(|(name, s)| TensorEntry {
            name: name.clone(),
            len: s.len(),
        })
        .collect();
    if layout != header.tensors {
        return Err("tensor layout does not match the configuration".into());
    }
    for dst in params.all_slices_mut() {
        let raw = take(&mut data, 8 * dst.len())?;
        for (v, chunk) in dst.iter_mut().zip(raw.chunks_exact(8)) {
            *v = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
        }
    }
    if !data.is_empty() {
        return Err(format!("{} trailing bytes", data.len()));
    }
    if !params.is_finite() {
        return Err("checkpoint contains non-finite parameters".into());
    }
    Ok((config, params))
}

pub fn save(path: &Path, config: &ModelConfig, vocab: &Vocabulary, params: &ModelParams) -> Result<()> {
    let bytes = encode(config, vocab, params)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load(
    path: &Path,
    vocab: &Vocabulary,
    expected: Option<&ModelConfig>,
) -> Result<(ModelConfig, ModelParams)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, vocab, expected).map_err(|message| Error::Checkpoint {
        path: path.to_path_buf(),
        message,
    })
}
