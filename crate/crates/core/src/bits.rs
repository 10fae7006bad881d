//! MSB-first bit writer/reader and exponential-Golomb codes.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BitError {
  #[error("unexpected end of data at bit {0}")]
  Eof(usize),
  #[error("exp-Golomb prefix too long at bit {0}")]
  Overlong(usize),
}

#[derive(Debug, Default, Clone)]
pub struct BitWriter {
  bytes: Vec<u8>,
  bit_len: usize,
}

impl BitWriter {
  pub fn new() -> Self {
    Self::default()
  }

  #[inline]
  pub fn write_bit(&mut self, bit: bool) {
    if self.bit_len.is_multiple_of(8) {
      self.bytes.push(0);
    }
    if bit {
      let last = self.bytes.len() - 1;
      self.bytes[last] |= 0x80 >> (self.bit_len % 8);
    }
    self.bit_len += 1;
  }

  /// Write the low `count` bits of `value`, most significant first.
  pub fn write_bits(&mut self, value: u64, count: u32) {
    for i in (0..count).rev() {
      self.write_bit((value >> i) & 1 == 1);
    }
  }

  pub fn write_ue(&mut self, value: u64) {
    let v = value + 1;
    let len = 64 - v.leading_zeros();
    self.write_bits(0, len - 1);
    self.write_bits(v, len);
  }

  pub fn write_se(&mut self, value: i64) {
    self.write_ue(se_to_ue(value));
  }

  /// Pad with zero bits to the next byte boundary; returns the pad length.
  pub fn align(&mut self) -> usize {
    let pad = (8 - self.bit_len % 8) % 8;
    self.bit_len += pad;
    pad
  }

  pub fn write_bytes(&mut self, data: &[u8]) {
    debug_assert_eq!(self.bit_len % 8, 0);
    self.bytes.extend_from_slice(data);
    self.bit_len += data.len() * 8;
  }

  pub fn bit_len(&self) -> usize {
    self.bit_len
  }

  pub fn into_bytes(self) -> Vec<u8> {
    self.bytes
  }
}

#[derive(Debug, Clone)]
pub struct BitReader<'a> {
  data: &'a [u8],
  pos: usize,
}

impl<'a> BitReader<'a> {
  pub fn new(data: &'a [u8]) -> Self {
    BitReader { data, pos: 0 }
  }

  /// Reader positioned at byte `offset`.
  pub fn at(data: &'a [u8], offset: usize) -> Self {
    BitReader { data, pos: offset * 8 }
  }

  pub fn position(&self) -> usize {
    self.pos
  }

  pub fn bits_left(&self) -> usize {
    (self.data.len() * 8).saturating_sub(self.pos)
  }

  #[inline]
  pub fn read_bit(&mut self) -> Result<bool, BitError> {
    let byte = *self.data.get(self.pos / 8).ok_or(BitError::Eof(self.pos))?;
    let bit = (byte >> (7 - self.pos % 8)) & 1 == 1;
    self.pos += 1;
    Ok(bit)
  }

  pub fn read_bits(&mut self, count: u32) -> Result<u64, BitError> {
    let mut v = 0u64;
    for _ in 0..count {
      v = (v << 1) | self.read_bit()? as u64;
    }
    Ok(v)
  }

  pub fn read_ue(&mut self) -> Result<u64, BitError> {
    let start = self.pos;
    let mut zeros = 0u32;
    while !self.read_bit()? {
      zeros += 1;
      if zeros > 62 {
        return Err(BitError::Overlong(start));
      }
    }
    let rest = self.read_bits(zeros)?;
    Ok(((1u64 << zeros) | rest) - 1)
  }

  pub fn read_se(&mut self) -> Result<i64, BitError> {
    Ok(ue_to_se(self.read_ue()?))
  }

  pub fn align(&mut self) {
    self.pos = self.pos.div_ceil(8) * 8;
  }
}

/// Signed to unsigned mapping: 0, 1, -1, 2, -2, ... -> 0, 1, 2, 3, 4, ...
#[inline]
pub fn se_to_ue(value: i64) -> u64 {
  if value > 0 {
    (value as u64) * 2 - 1
  } else {
    value.unsigned_abs() * 2
  }
}

#[inline]
pub fn ue_to_se(code: u64) -> i64 {
  if code % 2 == 1 {
    (code / 2 + 1) as i64
  } else {
    -((code / 2) as i64)
  }
}

/// Length in bits of the unsigned exp-Golomb code for `value`.
#[inline]
pub fn ue_len(value: u64) -> u32 {
  2 * (63 - (value + 1).leading_zeros()) + 1
}

/// Length in bits of the signed exp-Golomb code for `value`.
#[inline]
pub fn se_len(value: i64) -> u32 {
  ue_len(se_to_ue(value))
}
