//! PSNR, flow end-point error, RD-curve aggregation and Bjøntegaard deltas.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::model::{DenseFlowField, Frame, Plane, PlaneId, RdCurve, RdPoint};

/// PSNR reported for identical inputs.
pub const PSNR_CAP: f64 = 99.0;

const MIN_BD_POINTS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
  #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
  DimensionMismatch(usize, usize, usize, usize),
  #[error("curve {curve} has no point at q={q}")]
  MissingGridPoint { curve: usize, q: u32 },
  #[error("no curves to aggregate")]
  NoCurves,
  #[error("{which} curve has {got} distinct points, need at least 4")]
  InsufficientPoints { which: &'static str, got: usize },
  #[error("{which} curve has non-positive rate {rate} at q={q}")]
  NonPositiveRate { which: &'static str, q: u32, rate: f64 },
  #[error("curves do not overlap: [{lo}, {hi}] is empty")]
  NoOverlap { lo: f64, hi: f64 },
}

fn check_dims(a: (usize, usize), b: (usize, usize)) -> Result<(), MetricsError> {
  if a != b {
    return Err(MetricsError::DimensionMismatch(a.0, a.1, b.0, b.1));
  }
  Ok(())
}

fn squared_error(a: &Plane, b: &Plane) -> Result<u64, MetricsError> {
  check_dims((a.width(), a.height()), (b.width(), b.height()))?;
  Ok(a.data().iter().zip(b.data()).map(|(&x, &y)| (x.abs_diff(y) as u64).pow(2)).sum())
}

fn mse_to_psnr(sse: u64, count: usize) -> f64 {
  if sse == 0 {
    return PSNR_CAP;
  }
  let mse = sse as f64 / count as f64;
  (10.0 * (255.0 * 255.0 / mse).log10()).min(PSNR_CAP)
}

pub fn psnr_plane(a: &Plane, b: &Plane) -> Result<f64, MetricsError> {
  Ok(mse_to_psnr(squared_error(a, b)?, a.data().len()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameQuality {
  pub y: f64,
  pub u: f64,
  pub v: f64,
  /// Over all samples of the three planes pooled.
  pub combined: f64,
}

pub fn psnr(a: &Frame, b: &Frame) -> Result<FrameQuality, MetricsError> {
  check_dims((a.width(), a.height()), (b.width(), b.height()))?;
  let mut sse = [0u64; 3];
  for (i, id) in PlaneId::ALL.into_iter().enumerate() {
    sse[i] = squared_error(a.plane(id), b.plane(id))?;
  }
  let count = |id| a.plane(id).data().len();
  let total = count(PlaneId::Y) + count(PlaneId::U) + count(PlaneId::V);
  Ok(FrameQuality {
    y: mse_to_psnr(sse[0], count(PlaneId::Y)),
    u: mse_to_psnr(sse[1], count(PlaneId::U)),
    v: mse_to_psnr(sse[2], count(PlaneId::V)),
    combined: mse_to_psnr(sse.iter().sum(), total),
  })
}

/// Mean end-point error in pixels.
pub fn epe(f1: &DenseFlowField, f2: &DenseFlowField) -> Result<f64, MetricsError> {
  check_dims((f1.width(), f1.height()), (f2.width(), f2.height()))?;
  let total: f64 = f1
    .vectors()
    .iter()
    .zip(f2.vectors())
    .map(|(a, b)| (a.u as f64 - b.u as f64).hypot(a.v as f64 - b.v as f64))
    .sum();
  Ok(total / f1.vectors().len() as f64)
}

fn lower_median(values: &mut [f64]) -> f64 {
  values.sort_by(f64::total_cmp);
  values[(values.len() - 1) / 2]
}

/// Per-q median of rates and of PSNRs, taken independently (lower median for
/// even counts). The grid is the first curve's set of quantisers.
pub fn median_aggregate(curves: &[RdCurve]) -> Result<RdCurve, MetricsError> {
  let first = curves.first().ok_or(MetricsError::NoCurves)?;
  let mut points = Vec::with_capacity(first.len());
  for p in first.points() {
    let mut rates = Vec::with_capacity(curves.len());
    let mut psnrs = Vec::with_capacity(curves.len());
    for (i, c) in curves.iter().enumerate() {
      let at = c.at(p.q).ok_or(MetricsError::MissingGridPoint { curve: i, q: p.q })?;
      rates.push(at.rate);
      psnrs.push(at.psnr);
    }
    points.push(RdPoint { q: p.q, rate: lower_median(&mut rates), psnr: lower_median(&mut psnrs) });
  }
  // a point present elsewhere but absent from the first curve
  for c in &curves[1..] {
    if let Some(extra) = c.points().iter().find(|p| first.at(p.q).is_none()) {
      return Err(MetricsError::MissingGridPoint { curve: 0, q: extra.q });
    }
  }
  Ok(RdCurve::new(points))
}

/// Least-squares cubic in a normalised abscissa `t = (x - center) / scale`.
#[derive(Debug, Clone, Copy)]
struct CubicFit {
  coeffs: [f64; 4],
  center: f64,
  scale: f64,
}

impl CubicFit {
  fn fit(xs: &[f64], ys: &[f64], which: &'static str) -> Result<Self, MetricsError> {
    let mut distinct = xs.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < MIN_BD_POINTS {
      return Err(MetricsError::InsufficientPoints { which, got: distinct.len() });
    }
    let (lo, hi) = (distinct[0], distinct[distinct.len() - 1]);
    let center = 0.5 * (lo + hi);
    let scale = 0.5 * (hi - lo);
    let a = DMatrix::from_fn(xs.len(), 4, |r, c| ((xs[r] - center) / scale).powi(c as i32));
    let b = DVector::from_column_slice(ys);
    let sol = a.svd(true, true).solve(&b, 1e-12).expect("U and V were computed");
    Ok(CubicFit { coeffs: [sol[0], sol[1], sol[2], sol[3]], center, scale })
  }

  fn antiderivative(&self, t: f64) -> f64 {
    let c = &self.coeffs;
    t * (c[0] + t * (c[1] / 2.0 + t * (c[2] / 3.0 + t * c[3] / 4.0)))
  }

  /// Integral over `[lo, hi]` in the original abscissa.
  fn integral(&self, lo: f64, hi: f64) -> f64 {
    let t = |x: f64| (x - self.center) / self.scale;
    self.scale * (self.antiderivative(t(hi)) - self.antiderivative(t(lo)))
  }
}

fn log_rates(curve: &RdCurve, which: &'static str) -> Result<Vec<f64>, MetricsError> {
  curve
    .points()
    .iter()
    .map(|p| {
      if p.rate > 0.0 && p.rate.is_finite() {
        Ok(p.rate.log10())
      } else {
        Err(MetricsError::NonPositiveRate { which, q: p.q, rate: p.rate })
      }
    })
    .collect()
}

/// Mean vertical gap between two cubic fits over their common abscissa range.
fn mean_fit_difference(
  ref_x: &[f64],
  ref_y: &[f64],
  test_x: &[f64],
  test_y: &[f64],
) -> Result<f64, MetricsError> {
  let fr = CubicFit::fit(ref_x, ref_y, "reference")?;
  let ft = CubicFit::fit(test_x, test_y, "test")?;
  let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
  let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
  let lo = min(ref_x).max(min(test_x));
  let hi = max(ref_x).min(max(test_x));
  if lo >= hi {
    return Err(MetricsError::NoOverlap { lo, hi });
  }
  Ok((ft.integral(lo, hi) - fr.integral(lo, hi)) / (hi - lo))
}

/// Average rate difference of `test` against `reference` at equal PSNR, in
/// percent. Negative means the test curve needs fewer bits.
pub fn bd_rate(reference: &RdCurve, test: &RdCurve) -> Result<f64, MetricsError> {
  let psnr = |c: &RdCurve| c.points().iter().map(|p| p.psnr).collect::<Vec<_>>();
  let avg = mean_fit_difference(
    &psnr(reference),
    &log_rates(reference, "reference")?,
    &psnr(test),
    &log_rates(test, "test")?,
  )?;
  // + 0.0 folds a negative zero into positive zero
  Ok((10f64.powf(avg) - 1.0) * 100.0 + 0.0)
}

/// Average PSNR difference of `test` against `reference` at equal rate, in dB.
pub fn bd_psnr(reference: &RdCurve, test: &RdCurve) -> Result<f64, MetricsError> {
  let psnr = |c: &RdCurve| c.points().iter().map(|p| p.psnr).collect::<Vec<_>>();
  Ok(
    mean_fit_difference(
      &log_rates(reference, "reference")?,
      &psnr(reference),
      &log_rates(test, "test")?,
      &psnr(test),
    )? + 0.0,
  )
}
