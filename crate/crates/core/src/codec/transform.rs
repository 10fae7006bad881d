//! Orthonormal 2D DCT-II, uniform mid-tread quantiser and zig-zag scans.

use std::f64::consts::PI;

/// Separable orthonormal DCT-II of size `n`×`n`.
#[derive(Debug, Clone)]
pub struct Dct {
  n: usize,
  /// `basis[k * n + i] = alpha(k) cos(pi (2i + 1) k / 2n)`
  basis: Vec<f64>,
}

impl Dct {
  pub fn new(n: usize) -> Self {
    assert!(n > 0);
    let mut basis = vec![0.0; n * n];
    for k in 0..n {
      let alpha = if k == 0 { (1.0 / n as f64).sqrt() } else { (2.0 / n as f64).sqrt() };
      for i in 0..n {
        basis[k * n + i] = alpha * (PI * (2 * i + 1) as f64 * k as f64 / (2 * n) as f64).cos();
      }
    }
    Dct { n, basis }
  }

  pub fn size(&self) -> usize {
    self.n
  }

  /// `C X C^T`
  pub fn forward(&self, input: &[f64]) -> Vec<f64> {
    let n = self.n;
    assert_eq!(input.len(), n * n);
    let mut tmp = vec![0.0; n * n];
    // rows
    for r in 0..n {
      for k in 0..n {
        tmp[r * n + k] = (0..n).map(|i| self.basis[k * n + i] * input[r * n + i]).sum();
      }
    }
    // columns
    let mut out = vec![0.0; n * n];
    for c in 0..n {
      for k in 0..n {
        out[k * n + c] = (0..n).map(|i| self.basis[k * n + i] * tmp[i * n + c]).sum();
      }
    }
    out
  }

  /// `C^T Y C`
  pub fn inverse(&self, coeffs: &[f64]) -> Vec<f64> {
    let n = self.n;
    assert_eq!(coeffs.len(), n * n);
    let mut tmp = vec![0.0; n * n];
    for c in 0..n {
      for i in 0..n {
        tmp[i * n + c] = (0..n).map(|k| self.basis[k * n + i] * coeffs[k * n + c]).sum();
      }
    }
    let mut out = vec![0.0; n * n];
    for r in 0..n {
      for i in 0..n {
        out[r * n + i] = (0..n).map(|k| self.basis[k * n + i] * tmp[r * n + k]).sum();
      }
    }
    out
  }
}

pub fn dct8_forward(block: &[f64; 64]) -> [f64; 64] {
  Dct::new(8).forward(block).try_into().unwrap()
}

pub fn dct8_inverse(coeffs: &[f64; 64]) -> [f64; 64] {
  Dct::new(8).inverse(coeffs).try_into().unwrap()
}

/// `round(c / q)`, halves away from zero.
pub fn quantize(coeffs: &[f64], q: u32) -> Vec<i32> {
  let q = q as f64;
  coeffs.iter().map(|&c| (c / q).round() as i32).collect()
}

pub fn dequantize(levels: &[i32], q: u32) -> Vec<f64> {
  let q = q as f64;
  levels.iter().map(|&l| l as f64 * q).collect()
}

/// Raster indices of an `n`×`n` block in zig-zag order.
pub fn zigzag(n: usize) -> Vec<usize> {
  let mut order = Vec::with_capacity(n * n);
  for s in 0..2 * n - 1 {
    let lo = s.saturating_sub(n - 1);
    let hi = s.min(n - 1);
    if s % 2 == 0 {
      // up and to the right
      for r in (lo..=hi).rev() {
        order.push(r * n + (s - r));
      }
    } else {
      for r in lo..=hi {
        order.push(r * n + (s - r));
      }
    }
  }
  order
}
