//! Shared value types: frames, planes, quarter-pel motion vectors, dense flow
//! fields and block motion fields, plus the pixel sampling primitives every
//! other module builds on.

use std::fmt;

use thiserror::Error;

/// Default search range in whole pixels used to derive the vector bound.
pub const DEFAULT_SEARCH_RANGE_MAX: i32 = 32;

/// Default bound on |dx|, |dy| in quarter-pel units.
pub const DEFAULT_MV_BOUND: i32 = 4 * DEFAULT_SEARCH_RANGE_MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
  #[error("frame dimensions {width}x{height} must be positive and even")]
  BadDimensions { width: usize, height: usize },
  #[error("plane buffer has {got} samples, expected {expected}")]
  BadPlaneSize { expected: usize, got: usize },
  #[error("invalid plane id {0}")]
  InvalidPlane(u8),
  #[error("invalid block size {0} (expected 4, 8 or 16)")]
  InvalidBlockSize(usize),
  #[error("flow field has {got} vectors, expected {expected}")]
  BadFlowSize { expected: usize, got: usize },
  #[error("non-finite flow component at pixel {0}")]
  NonFiniteFlow(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlaneId {
  Y,
  U,
  V,
}

impl PlaneId {
  pub const ALL: [PlaneId; 3] = [PlaneId::Y, PlaneId::U, PlaneId::V];

  pub fn is_chroma(self) -> bool {
    self != PlaneId::Y
  }
}

impl TryFrom<u8> for PlaneId {
  type Error = ModelError;

  fn try_from(id: u8) -> Result<Self, Self::Error> {
    match id {
      0 => Ok(PlaneId::Y),
      1 => Ok(PlaneId::U),
      2 => Ok(PlaneId::V),
      _ => Err(ModelError::InvalidPlane(id)),
    }
  }
}

/// Block edge length in luma pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BlockSize {
  B4,
  B8,
  B16,
}

impl BlockSize {
  pub fn pixels(self) -> usize {
    match self {
      BlockSize::B4 => 4,
      BlockSize::B8 => 8,
      BlockSize::B16 => 16,
    }
  }

  pub fn chroma_pixels(self) -> usize {
    self.pixels() / 2
  }
}

impl TryFrom<usize> for BlockSize {
  type Error = ModelError;

  fn try_from(size: usize) -> Result<Self, Self::Error> {
    match size {
      4 => Ok(BlockSize::B4),
      8 => Ok(BlockSize::B8),
      16 => Ok(BlockSize::B16),
      _ => Err(ModelError::InvalidBlockSize(size)),
    }
  }
}

impl fmt::Display for BlockSize {
  fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "{}", self.pixels())
  }
}

/// A single 8-bit sample plane, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plane {
  width: usize,
  height: usize,
  data: Vec<u8>,
}

impl Plane {
  pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ModelError> {
    if data.len() != width * height {
      return Err(ModelError::BadPlaneSize { expected: width * height, got: data.len() });
    }
    Ok(Plane { width, height, data })
  }

  pub fn filled(width: usize, height: usize, value: u8) -> Self {
    Plane { width, height, data: vec![value; width * height] }
  }

  #[inline]
  pub fn width(&self) -> usize {
    self.width
  }

  #[inline]
  pub fn height(&self) -> usize {
    self.height
  }

  #[inline]
  pub fn data(&self) -> &[u8] {
    &self.data
  }

  #[inline]
  pub fn data_mut(&mut self) -> &mut [u8] {
    &mut self.data
  }

  #[inline]
  pub fn get(&self, x: usize, y: usize) -> u8 {
    self.data[y * self.width + x]
  }

  #[inline]
  pub fn set(&mut self, x: usize, y: usize, value: u8) {
    self.data[y * self.width + x] = value;
  }

  /// Sample with border replication for out-of-range coordinates.
  #[inline]
  pub fn get_clamped(&self, x: i64, y: i64) -> u8 {
    let x = x.clamp(0, self.width as i64 - 1) as usize;
    let y = y.clamp(0, self.height as i64 - 1) as usize;
    self.data[y * self.width + x]
  }

  pub fn row(&self, y: usize) -> &[u8] {
    &self.data[y * self.width..(y + 1) * self.width]
  }
}

/// A YUV 4:2:0 picture with 8-bit planes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
  pub index: usize,
  width: usize,
  height: usize,
  planes: [Plane; 3],
}

impl Frame {
  /// A mid-grey frame.
  pub fn new(width: usize, height: usize, index: usize) -> Result<Self, ModelError> {
    check_dims(width, height)?;
    Ok(Frame {
      index,
      width,
      height,
      planes: [
        Plane::filled(width, height, 128),
        Plane::filled(width / 2, height / 2, 128),
        Plane::filled(width / 2, height / 2, 128),
      ],
    })
  }

  pub fn from_planes(
    width: usize,
    height: usize,
    index: usize,
    y: Vec<u8>,
    u: Vec<u8>,
    v: Vec<u8>,
  ) -> Result<Self, ModelError> {
    check_dims(width, height)?;
    let (cw, ch) = (width / 2, height / 2);
    Ok(Frame {
      index,
      width,
      height,
      planes: [Plane::new(width, height, y)?, Plane::new(cw, ch, u)?, Plane::new(cw, ch, v)?],
    })
  }

  #[inline]
  pub fn width(&self) -> usize {
    self.width
  }

  #[inline]
  pub fn height(&self) -> usize {
    self.height
  }

  #[inline]
  pub fn plane(&self, id: PlaneId) -> &Plane {
    &self.planes[id as usize]
  }

  #[inline]
  pub fn plane_mut(&mut self, id: PlaneId) -> &mut Plane {
    &mut self.planes[id as usize]
  }

  pub fn luma(&self) -> &Plane {
    self.plane(PlaneId::Y)
  }

  pub fn same_dims(&self, other: &Frame) -> bool {
    self.width == other.width && self.height == other.height
  }
}

fn check_dims(width: usize, height: usize) -> Result<(), ModelError> {
  if width == 0 || height == 0 || !width.is_multiple_of(2) || !height.is_multiple_of(2) {
    return Err(ModelError::BadDimensions { width, height });
  }
  Ok(())
}

/// Copy a square block out of a plane with border replication.
///
/// `size` is the luma block size; chroma planes yield a `size / 2` block and
/// `x0`, `y0` are taken in the plane's own sample grid.
pub fn extract_block(
  frame: &Frame,
  plane: PlaneId,
  x0: i64,
  y0: i64,
  size: usize,
) -> Result<Vec<u8>, ModelError> {
  let block = BlockSize::try_from(size)?;
  let edge = if plane.is_chroma() { block.chroma_pixels() } else { block.pixels() };
  Ok(extract_square(frame.plane(plane), x0, y0, edge))
}

pub(crate) fn extract_square(plane: &Plane, x0: i64, y0: i64, edge: usize) -> Vec<u8> {
  let mut out = Vec::with_capacity(edge * edge);
  for dy in 0..edge as i64 {
    for dx in 0..edge as i64 {
      out.push(plane.get_clamped(x0 + dx, y0 + dy));
    }
  }
  out
}

/// Bilinear sample at quarter-pel coordinates `(qx, qy)`, clamped to the plane.
pub fn sample_bilinear(plane: &Plane, qx: i64, qy: i64) -> f64 {
  let qx = qx.clamp(0, 4 * (plane.width() as i64 - 1));
  let qy = qy.clamp(0, 4 * (plane.height() as i64 - 1));
  let (x0, y0) = ((qx >> 2) as usize, (qy >> 2) as usize);
  let a = (qx & 3) as f64 / 4.0;
  let b = (qy & 3) as f64 / 4.0;
  let x1 = (x0 + 1).min(plane.width() - 1);
  let y1 = (y0 + 1).min(plane.height() - 1);
  let p00 = plane.get(x0, y0) as f64;
  let p01 = plane.get(x1, y0) as f64;
  let p10 = plane.get(x0, y1) as f64;
  let p11 = plane.get(x1, y1) as f64;
  (1.0 - a) * (1.0 - b) * p00 + a * (1.0 - b) * p01 + (1.0 - a) * b * p10 + a * b * p11
}

/// Bilinear sample rounded to the nearest integer (halves round up).
///
/// Exact integer form of `sample_bilinear(..).round()`; this is the value the
/// codec predicts from.
#[inline]
pub fn predict_sample(plane: &Plane, qx: i64, qy: i64) -> u8 {
  let qx = qx.clamp(0, 4 * (plane.width() as i64 - 1));
  let qy = qy.clamp(0, 4 * (plane.height() as i64 - 1));
  let (x0, y0) = ((qx >> 2) as usize, (qy >> 2) as usize);
  let a = (qx & 3) as u32;
  let b = (qy & 3) as u32;
  if a == 0 && b == 0 {
    return plane.get(x0, y0);
  }
  let x1 = (x0 + 1).min(plane.width() - 1);
  let y1 = (y0 + 1).min(plane.height() - 1);
  let p00 = plane.get(x0, y0) as u32;
  let p01 = plane.get(x1, y0) as u32;
  let p10 = plane.get(x0, y1) as u32;
  let p11 = plane.get(x1, y1) as u32;
  let acc = (4 - a) * (4 - b) * p00 + a * (4 - b) * p01 + (4 - a) * b * p10 + a * b * p11;
  ((acc + 8) >> 4) as u8
}

/// Displacement in quarter-pel units.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct MotionVector {
  pub dx: i32,
  pub dy: i32,
}

impl MotionVector {
  pub const ZERO: MotionVector = MotionVector { dx: 0, dy: 0 };

  pub const fn new(dx: i32, dy: i32) -> Self {
    MotionVector { dx, dy }
  }

  /// Vector from whole-pixel components.
  pub const fn from_pel(x: i32, y: i32) -> Self {
    MotionVector { dx: 4 * x, dy: 4 * y }
  }

  pub fn l1(self) -> i32 {
    self.dx.abs() + self.dy.abs()
  }

  pub fn is_integer(self) -> bool {
    self.dx % 4 == 0 && self.dy % 4 == 0
  }

  /// Displacement in pixels.
  pub fn to_pel(self) -> (f64, f64) {
    (self.dx as f64 / 4.0, self.dy as f64 / 4.0)
  }

  /// Halved vector on the chroma grid, re-rounded to quarter-pel.
  pub fn chroma(self) -> MotionVector {
    MotionVector { dx: half_away(self.dx), dy: half_away(self.dy) }
  }

  pub fn clamp(self, bound: i32) -> MotionVector {
    MotionVector { dx: self.dx.clamp(-bound, bound), dy: self.dy.clamp(-bound, bound) }
  }
}

impl std::ops::Add for MotionVector {
  type Output = MotionVector;
  fn add(self, rhs: MotionVector) -> MotionVector {
    MotionVector { dx: self.dx + rhs.dx, dy: self.dy + rhs.dy }
  }
}

impl std::ops::Sub for MotionVector {
  type Output = MotionVector;
  fn sub(self, rhs: MotionVector) -> MotionVector {
    MotionVector { dx: self.dx - rhs.dx, dy: self.dy - rhs.dy }
  }
}

impl fmt::Display for MotionVector {
  fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "({}, {})", self.dx, self.dy)
  }
}

#[inline]
fn half_away(v: i32) -> i32 {
  if v >= 0 {
    (v + 1) / 2
  } else {
    -((-v + 1) / 2)
  }
}

/// Round a real-valued displacement to the quarter-pel grid.
///
/// Ties round away from zero; the result is clamped to `±bound`.
pub fn quantize_to_quarter_pel(u: f64, v: f64, bound: i32) -> MotionVector {
  let q = |c: f64| -> i32 {
    let r = (c * 4.0).round();
    r.clamp(-(bound as f64), bound as f64) as i32
  };
  MotionVector { dx: q(u), dy: q(v) }
}

/// One dense flow vector in pixels.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FlowVector {
  pub u: f32,
  pub v: f32,
}

impl FlowVector {
  pub const fn new(u: f32, v: f32) -> Self {
    FlowVector { u, v }
  }
}

/// Per-pixel flow mapping each site of frame n to frame n-1.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseFlowField {
  width: usize,
  height: usize,
  vectors: Vec<FlowVector>,
}

impl DenseFlowField {
  pub fn new(width: usize, height: usize, vectors: Vec<FlowVector>) -> Result<Self, ModelError> {
    if vectors.len() != width * height {
      return Err(ModelError::BadFlowSize { expected: width * height, got: vectors.len() });
    }
    if let Some(i) = vectors.iter().position(|f| !f.u.is_finite() || !f.v.is_finite()) {
      return Err(ModelError::NonFiniteFlow(i));
    }
    Ok(DenseFlowField { width, height, vectors })
  }

  pub fn constant(width: usize, height: usize, value: FlowVector) -> Self {
    DenseFlowField { width, height, vectors: vec![value; width * height] }
  }

  pub fn width(&self) -> usize {
    self.width
  }

  pub fn height(&self) -> usize {
    self.height
  }

  pub fn vectors(&self) -> &[FlowVector] {
    &self.vectors
  }

  #[inline]
  pub fn get(&self, x: usize, y: usize) -> FlowVector {
    self.vectors[y * self.width + x]
  }

  pub fn matches(&self, frame: &Frame) -> bool {
    self.width == frame.width() && self.height == frame.height()
  }
}

/// One motion vector per grid-aligned block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockMotionField {
  block_size: BlockSize,
  cols: usize,
  rows: usize,
  vectors: Vec<MotionVector>,
}

impl BlockMotionField {
  /// Zero field covering a `width`×`height` luma plane.
  pub fn new(width: usize, height: usize, block_size: BlockSize) -> Self {
    let b = block_size.pixels();
    let cols = width.div_ceil(b);
    let rows = height.div_ceil(b);
    BlockMotionField { block_size, cols, rows, vectors: vec![MotionVector::ZERO; cols * rows] }
  }

  pub fn filled(width: usize, height: usize, block_size: BlockSize, mv: MotionVector) -> Self {
    let mut field = Self::new(width, height, block_size);
    field.vectors.fill(mv);
    field
  }

  pub fn block_size(&self) -> BlockSize {
    self.block_size
  }

  pub fn cols(&self) -> usize {
    self.cols
  }

  pub fn rows(&self) -> usize {
    self.rows
  }

  pub fn vectors(&self) -> &[MotionVector] {
    &self.vectors
  }

  #[inline]
  pub fn get(&self, col: usize, row: usize) -> MotionVector {
    self.vectors[row * self.cols + col]
  }

  #[inline]
  pub fn set(&mut self, col: usize, row: usize, mv: MotionVector) {
    self.vectors[row * self.cols + col] = mv;
  }

  pub fn matches(&self, frame: &Frame) -> bool {
    let b = self.block_size.pixels();
    self.cols == frame.width().div_ceil(b) && self.rows == frame.height().div_ceil(b)
  }
}

/// Rate/quality measurement at one quantiser setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdPoint {
  pub q: u32,
  /// Mean bits per frame.
  pub rate: f64,
  /// dB.
  pub psnr: f64,
}

/// RD points ordered by quantiser.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RdCurve {
  points: Vec<RdPoint>,
}

impl RdCurve {
  pub fn new(mut points: Vec<RdPoint>) -> Self {
    points.sort_by_key(|p| p.q);
    RdCurve { points }
  }

  pub fn points(&self) -> &[RdPoint] {
    &self.points
  }

  pub fn len(&self) -> usize {
    self.points.len()
  }

  pub fn is_empty(&self) -> bool {
    self.points.is_empty()
  }

  pub fn at(&self, q: u32) -> Option<&RdPoint> {
    self.points.iter().find(|p| p.q == q)
  }
}
