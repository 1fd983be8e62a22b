//! Binary parameter files.
//!
//! Layout (little-endian): magic (4 bytes), format version `u32`, value count
//! `u64`, then that many IEEE-754 `f64` values. Networks are written in
//! [`Mlp::tensors`] order.

use super::mlp::{Mlp, MlpSpec};
use crate::error::{Error, Result};

pub const MLP_MAGIC: [u8; 4] = *b"MLPW";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;

/// Why a blob failed to decode; callers attach the file path.
#[derive(Debug, Clone, PartialEq)]
pub enum DecodeError {
    BadMagic,
    Version(u32),
    Truncated { expected: usize, found: usize },
    CountMismatch { expected: u64, found: u64 },
}

impl DecodeError {
    pub fn into_error(self, path: &std::path::Path) -> Error {
        match self {
            DecodeError::Version(found) => Error::FormatVersion { found, expected: FORMAT_VERSION },
            DecodeError::BadMagic => {
                Error::Corruption { path: path.to_path_buf(), reason: "bad magic".into() }
            }
            DecodeError::Truncated { expected, found } => Error::Corruption {
                path: path.to_path_buf(),
                reason: format!("expected {expected} bytes, found {found}"),
            },
            DecodeError::CountMismatch { expected, found } => Error::Corruption {
                path: path.to_path_buf(),
                reason: format!("expected {expected} values, header says {found}"),
            },
        }
    }
}

pub fn encode_f64s(magic: [u8; 4], values: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + values.len() * 8);
    out.extend_from_slice(&magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(values.len() as u64).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_f64s(magic: [u8; 4], bytes: &[u8]) -> Result<Vec<f64>, DecodeError> {
    if bytes.len() < HEADER_LEN {
        return Err(DecodeError::Truncated { expected: HEADER_LEN, found: bytes.len() });
    }
    if bytes[..4] != magic {
        return Err(DecodeError::BadMagic);
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(DecodeError::Version(version));
    }
    let count = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
    let expected = HEADER_LEN as u64 + count.saturating_mul(8);
    if bytes.len() as u64 != expected {
        return Err(DecodeError::Truncated { expected: expected as usize, found: bytes.len() });
    }
    Ok(bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect())
}

pub fn encode_mlp(net: &Mlp) -> Vec<u8> {
    let flat: Vec<f64> = net.tensors().into_iter().flatten().copied().collect();
    encode_f64s(MLP_MAGIC, &flat)
}

pub fn decode_mlp(spec: MlpSpec, bytes: &[u8]) -> Result<Mlp, DecodeError> {
    let values = decode_f64s(MLP_MAGIC, bytes)?;
    let mut net = Mlp::zeros(spec).map_err(|_| DecodeError::BadMagic)?;
    let expected = net.parameter_count() as u64;
    if values.len() as u64 != expected {
        return Err(DecodeError::CountMismatch { expected, found: values.len() as u64 });
    }
    let mut offset = 0;
    for t in net.tensors_mut() {
        t.copy_from_slice(&values[offset..offset + t.len()]);
        offset += t.len();
    }
    Ok(net)
}
