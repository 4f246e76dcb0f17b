//! Binary checkpoint format.
//!
//! Layout (all integers little-endian u32 unless noted):
//!   magic  b"RMRK"
//!   version
//!   config: n_layers, hidden_size, n_heads, ffn_size, max_positions,
//!           vocab_size, dropout_rate (f64)
//!   vocab_hash: 32 bytes (SHA-256 of the vocabulary file content)
//!   extra: length-prefixed UTF-8 JSON (head configuration and metadata)
//!   n_tensors, then per tensor:
//!     name_len, name bytes, rank, dims..., values as f32 little-endian
//!
//! Tensors appear in the fixed order defined by `TensorCollection`.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{ModelConfig, ModelError, TensorRef};
use crate::math::Real;

const MAGIC: &[u8; 4] = b"RMRK";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone)]
pub struct CheckpointHeader {
    pub version: u32,
    pub config: ModelConfig,
    pub vocab_hash: [u8; 32],
    pub extra: String,
}

#[derive(Debug, Clone)]
pub struct NamedTensor {
    pub name: String,
    pub dims: Vec<usize>,
    pub data: Vec<f32>,
}

pub fn write_checkpoint<T: Real>(
    path: &Path,
    config: &ModelConfig,
    vocab_hash: &[u8; 32],
    extra: &str,
    tensors: &[TensorRef<'_, T>],
) -> Result<(), ModelError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&FORMAT_VERSION.to_le_bytes())?;
    for v in [
        config.n_layers,
        config.hidden_size,
        config.n_heads,
        config.ffn_size,
        config.max_positions,
        config.vocab_size,
    ] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    w.write_all(&config.dropout_rate.to_le_bytes())?;
    w.write_all(vocab_hash)?;
    w.write_all(&(extra.len() as u32).to_le_bytes())?;
    w.write_all(extra.as_bytes())?;
    w.write_all(&(tensors.len() as u32).to_le_bytes())?;
    for t in tensors {
        w.write_all(&(t.name.len() as u32).to_le_bytes())?;
        w.write_all(t.name.as_bytes())?;
        w.write_all(&(t.dims.len() as u32).to_le_bytes())?;
        for &d in &t.dims {
            w.write_all(&(d as u32).to_le_bytes())?;
        }
        for &x in t.data {
            w.write_all(&x.to_f32().to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32(r: &mut impl Read) -> Result<u32, ModelError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f32(r: &mut impl Read) -> Result<f32, ModelError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(f32::from_le_bytes(buf))
}

fn read_f64(r: &mut impl Read) -> Result<f64, ModelError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

pub fn read_checkpoint(path: &Path) -> Result<(CheckpointHeader, Vec<NamedTensor>), ModelError> {
    let mut r = BufReader::new(std::fs::File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ModelError::BadCheckpoint("wrong magic bytes".into()));
    }
    let version = read_u32(&mut r)?;
    if version != FORMAT_VERSION {
        return Err(ModelError::BadCheckpoint(format!(
            "unsupported format version {version}"
        )));
    }
    let config = ModelConfig {
        n_layers: read_u32(&mut r)? as usize,
        hidden_size: read_u32(&mut r)? as usize,
        n_heads: read_u32(&mut r)? as usize,
        ffn_size: read_u32(&mut r)? as usize,
        max_positions: read_u32(&mut r)? as usize,
        vocab_size: read_u32(&mut r)? as usize,
        dropout_rate: read_f64(&mut r)?,
    };
    let mut vocab_hash = [0u8; 32];
    r.read_exact(&mut vocab_hash)?;
    let extra_len = read_u32(&mut r)? as usize;
    let mut extra_bytes = vec![0u8; extra_len];
    r.read_exact(&mut extra_bytes)?;
    let extra = String::from_utf8(extra_bytes)
        .map_err(|_| ModelError::BadCheckpoint("extra block is not UTF-8".into()))?;

    let n_tensors = read_u32(&mut r)? as usize;
    let mut tensors = Vec::with_capacity(n_tensors);
    for _ in 0..n_tensors {
        let name_len = read_u32(&mut r)? as usize;
        let mut name_bytes = vec![0u8; name_len];
        r.read_exact(&mut name_bytes)?;
        let name = String::from_utf8(name_bytes)
            .map_err(|_| ModelError::BadCheckpoint("tensor name is not UTF-8".into()))?;
        let rank = read_u32(&mut r)? as usize;
        let mut dims = Vec::with_capacity(rank);
        for _ in 0..rank {
            dims.push(read_u32(&mut r)? as usize);
        }
        let count: usize = dims.iter().product();
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            data.push(read_f32(&mut r)?);
        }
        tensors.push(NamedTensor { name, dims, data });
    }
    Ok((
        CheckpointHeader {
            version,
            config,
            vocab_hash,
            extra,
        },
        tensors,
    ))
}
