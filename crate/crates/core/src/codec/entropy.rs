//! Run-level coding of zig-zag scanned transform levels.
//!
//! Each non-zero level is written as `se(level)` followed by `ue(run)`, the
//! number of zeros skipped before it. A zero level, `se(0)` = `1`, is the
//! one-bit end-of-block symbol; it can never be confused with a coded level.

use thiserror::Error;

use crate::bits::{se_len, ue_len, BitError, BitReader, BitWriter};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EntropyError {
  #[error(transparent)]
  Bits(#[from] BitError),
  #[error("run of {run} at bit {bit} overflows a {len}-coefficient block")]
  RunOverflow { run: u64, bit: usize, len: usize },
}

fn pairs(scanned: &[i32]) -> impl Iterator<Item = (i32, u64)> + '_ {
  let mut run = 0u64;
  scanned.iter().filter_map(move |&l| {
    if l == 0 {
      run += 1;
      None
    } else {
      let r = run;
      run = 0;
      Some((l, r))
    }
  })
}

/// Exact coded length of one block.
pub fn residual_bits(scanned: &[i32]) -> u32 {
  pairs(scanned).map(|(l, r)| se_len(l as i64) + ue_len(r)).sum::<u32>() + 1
}

pub fn write_levels(w: &mut BitWriter, scanned: &[i32]) {
  for (level, run) in pairs(scanned) {
    w.write_se(level as i64);
    w.write_ue(run);
  }
  w.write_se(0);
}

/// Decode one block of `len` scanned levels.
pub fn read_levels(r: &mut BitReader, len: usize) -> Result<Vec<i32>, EntropyError> {
  let mut out = vec![0i32; len];
  let mut pos = 0usize;
  loop {
    let level = r.read_se()?;
    if level == 0 {
      return Ok(out);
    }
    let bit = r.position();
    let run = r.read_ue()?;
    let at = pos as u64 + run;
    if at >= len as u64 {
      return Err(EntropyError::RunOverflow { run, bit, len });
    }
    out[at as usize] = level as i32;
    pos = at as usize + 1;
  }
}
