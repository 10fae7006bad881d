//! Dense flow to block vectors.
//!
//! Two block estimators are provided: the component-wise mean of the K flow
//! vectors inside a block, and their vector median (the member of the set
//! with the smallest summed distance to all others).

use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{
  quantize_to_quarter_pel, BlockMotionField, BlockSize, DenseFlowField, FlowVector, MotionVector,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FlowAdaptError {
  #[error("block at ({x0}, {y0}) does not intersect the {width}x{height} flow field")]
  EmptyBlock { x0: usize, y0: usize, width: usize, height: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FlowEstimator {
  Mean,
  /// Vector median under the Euclidean distance.
  VectorMedian,
  /// Vector median under the city-block distance.
  VectorMedianL1,
}

impl FromStr for FlowEstimator {
  type Err = String;

  fn from_str(s: &str) -> Result<Self, Self::Err> {
    match s {
      "mean" => Ok(FlowEstimator::Mean),
      "median" | "vector-median" => Ok(FlowEstimator::VectorMedian),
      "median-l1" | "vector-median-l1" => Ok(FlowEstimator::VectorMedianL1),
      _ => Err(format!("unknown flow estimator {s:?}")),
    }
  }
}

/// Axis-aligned pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockRect {
  pub x0: usize,
  pub y0: usize,
  pub width: usize,
  pub height: usize,
}

impl BlockRect {
  pub fn square(x0: usize, y0: usize, size: usize) -> Self {
    BlockRect { x0, y0, width: size, height: size }
  }
}

/// Flow vectors of `field` inside `rect`, row-major; edge blocks yield only
/// the in-bounds subset.
pub fn block_vectors(
  field: &DenseFlowField,
  rect: BlockRect,
) -> Result<Vec<FlowVector>, FlowAdaptError> {
  let x1 = (rect.x0 + rect.width).min(field.width());
  let y1 = (rect.y0 + rect.height).min(field.height());
  if rect.x0 >= x1 || rect.y0 >= y1 {
    return Err(FlowAdaptError::EmptyBlock {
      x0: rect.x0,
      y0: rect.y0,
      width: field.width(),
      height: field.height(),
    });
  }
  let mut out = Vec::with_capacity((x1 - rect.x0) * (y1 - rect.y0));
  for y in rect.y0..y1 {
    out.extend_from_slice(&field.vectors()[y * field.width() + rect.x0..y * field.width() + x1]);
  }
  Ok(out)
}

/// Component-wise mean in double precision.
pub fn mean_vector(vectors: &[FlowVector]) -> Option<(f64, f64)> {
  if vectors.is_empty() {
    return None;
  }
  let (su, sv) =
    vectors.iter().fold((0.0f64, 0.0f64), |(su, sv), f| (su + f.u as f64, sv + f.v as f64));
  let k = vectors.len() as f64;
  Some((su / k, sv / k))
}

fn distance(a: FlowVector, b: FlowVector, l1: bool) -> f64 {
  let du = a.u as f64 - b.u as f64;
  let dv = a.v as f64 - b.v as f64;
  if l1 {
    du.abs() + dv.abs()
  } else {
    (du * du + dv * dv).sqrt()
  }
}

/// The member of `vectors` minimising the summed distance to every member.
///
/// Ties go to the smaller magnitude, then the smaller `u`, then the smaller `v`.
pub fn vector_median(vectors: &[FlowVector], l1: bool) -> Option<FlowVector> {
  let magnitude = |f: FlowVector| (f.u as f64).powi(2) + (f.v as f64).powi(2);
  vectors
    .iter()
    .map(|&candidate| {
      let total: f64 = vectors.iter().map(|&other| distance(candidate, other, l1)).sum();
      (total, candidate)
    })
    .min_by(|(ta, a), (tb, b)| {
      ta.total_cmp(tb)
        .then_with(|| magnitude(*a).total_cmp(&magnitude(*b)))
        // + 0.0 folds -0.0 into +0.0 so equal components tie
        .then_with(|| (a.u + 0.0).total_cmp(&(b.u + 0.0)))
        .then_with(|| (a.v + 0.0).total_cmp(&(b.v + 0.0)))
    })
    .map(|(_, f)| f)
}

pub fn block_mean(
  field: &DenseFlowField,
  rect: BlockRect,
  bound: i32,
) -> Result<MotionVector, FlowAdaptError> {
  let vectors = block_vectors(field, rect)?;
  let (u, v) = mean_vector(&vectors).expect("non-empty block");
  Ok(quantize_to_quarter_pel(u, v, bound))
}

pub fn block_vector_median(
  field: &DenseFlowField,
  rect: BlockRect,
  l1: bool,
  bound: i32,
) -> Result<MotionVector, FlowAdaptError> {
  let vectors = block_vectors(field, rect)?;
  let m = vector_median(&vectors, l1).expect("non-empty block");
  Ok(quantize_to_quarter_pel(m.u as f64, m.v as f64, bound))
}

/// Estimate one vector per block of the grid covering `field`.
pub fn downsample_flow(
  field: &DenseFlowField,
  block_size: BlockSize,
  method: FlowEstimator,
  bound: i32,
) -> Result<BlockMotionField, FlowAdaptError> {
  let mut out = BlockMotionField::new(field.width(), field.height(), block_size);
  let (cols, b) = (out.cols(), block_size.pixels());
  let vectors = (0..cols * out.rows())
    .into_par_iter()
    .map(|i| {
      let rect = BlockRect::square((i % cols) * b, (i / cols) * b, b);
      match method {
        FlowEstimator::Mean => block_mean(field, rect, bound),
        FlowEstimator::VectorMedian => block_vector_median(field, rect, false, bound),
        FlowEstimator::VectorMedianL1 => block_vector_median(field, rect, true, bound),
      }
    })
    .collect::<Result<Vec<_>, _>>()?;
  for (i, mv) in vectors.into_iter().enumerate() {
    out.set(i % cols, i / cols, mv);
  }
  Ok(out)
}

/// Paint every block's vector (in pixels) over its block.
pub fn expand_block_field(
  blocks: &BlockMotionField,
  width: usize,
  height: usize,
) -> DenseFlowField {
  let b = blocks.block_size().pixels();
  let vectors = (0..width * height)
    .map(|i| {
      let (u, v) = blocks.get((i % width) / b, (i / width) / b).to_pel();
      FlowVector::new(u as f32, v as f32)
    })
    .collect();
  DenseFlowField::new(width, height, vectors).expect("finite by construction")
}
