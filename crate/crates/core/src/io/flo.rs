//! Middlebury `.flo` flow files: little-endian float magic 202021.25
//! ("PIEH"), int32 width, int32 height, then interleaved (u, v) float32 pairs
//! in row-major order.

use std::io::{self, Read, Write};

use thiserror::Error;

use crate::model::{DenseFlowField, FlowVector};

pub const FLO_MAGIC: f32 = 202021.25;

/// Components above this magnitude mark unknown flow.
pub const UNKNOWN_FLOW_THRESHOLD: f32 = 1e9;

const HEADER_LEN: usize = 12;

#[derive(Debug, Error)]
pub enum FloError {
  #[error("bad magic {0} (expected 202021.25)")]
  BadMagic(f32),
  #[error("header truncated: {0} of 12 bytes")]
  ShortHeader(usize),
  #[error("invalid dimensions {width}x{height}")]
  BadDimensions { width: i32, height: i32 },
  #[error("{width}x{height} field needs {needed} payload bytes, stream has {available}")]
  DimensionOverflow { width: usize, height: usize, needed: usize, available: usize },
  #[error("{count} NaN components (first at byte {first_offset})")]
  NaN { count: usize, first_offset: usize },
  #[error(transparent)]
  Io(#[from] io::Error),
}

/// A parsed flow file with the number of sentinel vectors that were zeroed.
#[derive(Debug, Clone, PartialEq)]
pub struct FloFile {
  pub field: DenseFlowField,
  pub unknown: usize,
}

pub fn read_flo<R: Read>(mut input: R) -> Result<FloFile, FloError> {
  let mut bytes = Vec::new();
  input.read_to_end(&mut bytes)?;
  parse_flo(&bytes)
}

pub fn parse_flo(bytes: &[u8]) -> Result<FloFile, FloError> {
  if bytes.len() < HEADER_LEN {
    return Err(FloError::ShortHeader(bytes.len()));
  }
  let word = |i: usize| -> [u8; 4] { bytes[i..i + 4].try_into().unwrap() };
  let magic = f32::from_le_bytes(word(0));
  if magic != FLO_MAGIC {
    return Err(FloError::BadMagic(magic));
  }
  let (w, h) = (i32::from_le_bytes(word(4)), i32::from_le_bytes(word(8)));
  if w <= 0 || h <= 0 {
    return Err(FloError::BadDimensions { width: w, height: h });
  }
  let (width, height) = (w as usize, h as usize);
  let available = bytes.len() - HEADER_LEN;
  let needed = width.checked_mul(height).and_then(|n| n.checked_mul(8));
  match needed {
    Some(needed) if needed <= available => {}
    _ => {
      return Err(FloError::DimensionOverflow {
        width,
        height,
        needed: needed.unwrap_or(usize::MAX),
        available,
      })
    }
  }

  let mut vectors = Vec::with_capacity(width * height);
  let (mut unknown, mut nan, mut first_nan) = (0, 0, None);
  for (i, pair) in bytes[HEADER_LEN..HEADER_LEN + width * height * 8].chunks_exact(8).enumerate() {
    let u = f32::from_le_bytes(pair[..4].try_into().unwrap());
    let v = f32::from_le_bytes(pair[4..].try_into().unwrap());
    if u.is_nan() || v.is_nan() {
      nan += u.is_nan() as usize + v.is_nan() as usize;
      first_nan.get_or_insert(HEADER_LEN + i * 8 + if u.is_nan() { 0 } else { 4 });
      vectors.push(FlowVector::default());
    } else if u.abs() > UNKNOWN_FLOW_THRESHOLD || v.abs() > UNKNOWN_FLOW_THRESHOLD {
      unknown += 1;
      vectors.push(FlowVector::default());
    } else {
      vectors.push(FlowVector::new(u, v));
    }
  }
  if let Some(first_offset) = first_nan {
    return Err(FloError::NaN { count: nan, first_offset });
  }
  let field = DenseFlowField::new(width, height, vectors).expect("validated above");
  Ok(FloFile { field, unknown })
}

pub fn write_flo<W: Write>(mut out: W, field: &DenseFlowField) -> io::Result<()> {
  out.write_all(&flo_bytes(field))
}

pub fn flo_bytes(field: &DenseFlowField) -> Vec<u8> {
  let mut buf = Vec::with_capacity(HEADER_LEN + field.vectors().len() * 8);
  buf.extend_from_slice(&FLO_MAGIC.to_le_bytes());
  buf.extend_from_slice(&(field.width() as i32).to_le_bytes());
  buf.extend_from_slice(&(field.height() as i32).to_le_bytes());
  for f in field.vectors() {
    buf.extend_from_slice(&f.u.to_le_bytes());
    buf.extend_from_slice(&f.v.to_le_bytes());
  }
  buf
}
