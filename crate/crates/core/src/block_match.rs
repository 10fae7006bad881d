//! Block-matching motion estimation.
//!
//! Candidates are scored with the motion RD energy
//! `cost(d) = lambda_y * R(d) + SAD(d)`, where `R(d)` is the signed
//! exp-Golomb length of the vector difference to the median predictor.
//! Searches are full (exhaustive), diamond and hexagon, each optionally
//! followed by a local quarter-pel refinement.

use std::cmp::Ordering;

use thiserror::Error;

use crate::bits::se_len;
use crate::model::{
  extract_square, predict_sample, BlockMotionField, BlockSize, Frame, MotionVector, Plane, PlaneId,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SearchError {
  #[error("search range must be at least 1 pixel")]
  ZeroRange,
  #[error("quantiser must be at least 1")]
  ZeroQuantiser,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
  /// Integer-pel window half-width.
  pub search_range: u32,
  pub block_size: BlockSize,
  pub refine_subpel: bool,
}

impl Default for SearchConfig {
  fn default() -> Self {
    SearchConfig { search_range: 16, block_size: BlockSize::B16, refine_subpel: true }
  }
}

impl SearchConfig {
  pub fn validate(&self) -> Result<(), SearchError> {
    if self.search_range == 0 {
      return Err(SearchError::ZeroRange);
    }
    Ok(())
  }

  /// Window bound in quarter-pel units.
  pub fn window(&self) -> i32 {
    4 * self.search_range as i32
  }
}

/// Lagrangian parameters derived from the quantiser.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RdParams {
  q: u32,
  chroma_in_cost: bool,
}

impl RdParams {
  pub fn new(q: u32) -> Result<Self, SearchError> {
    if q == 0 {
      return Err(SearchError::ZeroQuantiser);
    }
    Ok(RdParams { q, chroma_in_cost: false })
  }

  /// Also score chroma SAD, weighted by `lambda_c / (256 q^2)`.
  pub fn with_chroma(mut self, enabled: bool) -> Self {
    self.chroma_in_cost = enabled;
    self
  }

  pub fn q(&self) -> u32 {
    self.q
  }

  /// `2^(q/6 - 2)`
  pub fn lambda_y(&self) -> f64 {
    2f64.powf(self.q as f64 / 6.0 - 2.0)
  }

  /// `q^2 * 0.9 * 256`
  pub fn lambda_c(&self) -> f64 {
    let q = self.q as f64;
    q * q * 0.9 * 256.0
  }

  pub fn chroma_in_cost(&self) -> bool {
    self.chroma_in_cost
  }

  pub fn chroma_weight(&self) -> f64 {
    if self.chroma_in_cost {
      let q = self.q as f64;
      self.lambda_c() / (256.0 * q * q)
    } else {
      0.0
    }
  }
}

/// Sum of absolute differences between `cur_block` (an `edge`×`edge` block
/// whose top-left sits at `(x0, y0)`) and the reference displaced by `mv`.
///
/// Sub-pel positions use bilinear samples rounded to the nearest integer.
pub fn sad(
  cur_block: &[u8],
  edge: usize,
  reference: &Plane,
  x0: i64,
  y0: i64,
  mv: MotionVector,
) -> u32 {
  let mut acc = 0u32;
  if mv.is_integer() {
    let (ox, oy) = (x0 + (mv.dx / 4) as i64, y0 + (mv.dy / 4) as i64);
    let inside = ox >= 0
      && oy >= 0
      && ox as usize + edge <= reference.width()
      && oy as usize + edge <= reference.height();
    for (r, row) in cur_block.chunks_exact(edge).enumerate() {
      if inside {
        let start = (oy as usize + r) * reference.width() + ox as usize;
        let ref_row = &reference.data()[start..start + edge];
        acc += row.iter().zip(ref_row).map(|(&a, &b)| a.abs_diff(b) as u32).sum::<u32>();
      } else {
        for (c, &a) in row.iter().enumerate() {
          acc += a.abs_diff(reference.get_clamped(ox + c as i64, oy + r as i64)) as u32;
        }
      }
    }
  } else {
    for (r, row) in cur_block.chunks_exact(edge).enumerate() {
      let qy = 4 * (y0 + r as i64) + mv.dy as i64;
      for (c, &a) in row.iter().enumerate() {
        let qx = 4 * (x0 + c as i64) + mv.dx as i64;
        acc += a.abs_diff(predict_sample(reference, qx, qy)) as u32;
      }
    }
  }
  acc
}

/// Bits to code `mv` as a signed exp-Golomb difference from `predictor`.
pub fn mv_rate_bits(mv: MotionVector, predictor: MotionVector) -> u32 {
  se_len((mv.dx - predictor.dx) as i64) + se_len((mv.dy - predictor.dy) as i64)
}

/// `lambda_y * R(mv) + distortion`.
pub fn rd_cost(distortion: u32, mv: MotionVector, predictor: MotionVector, rd: &RdParams) -> f64 {
  rd.lambda_y() * mv_rate_bits(mv, predictor) as f64 + distortion as f64
}

/// A scored motion candidate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
  pub mv: MotionVector,
  /// Luma SAD.
  pub distortion: u32,
  /// Chroma SAD (zero unless chroma scoring is enabled).
  pub chroma_distortion: u32,
  pub bits: u32,
  pub cost: f64,
}

impl Candidate {
  /// Total order: cost, then |dx|+|dy|, then dy, then dx.
  pub fn order(&self, other: &Candidate) -> Ordering {
    self
      .cost
      .total_cmp(&other.cost)
      .then(self.mv.l1().cmp(&other.mv.l1()))
      .then(self.mv.dy.cmp(&other.mv.dy))
      .then(self.mv.dx.cmp(&other.mv.dx))
  }

  pub fn better_than(&self, other: &Candidate) -> bool {
    self.order(other) == Ordering::Less
  }
}

/// One block of the current frame prepared for matching against a reference.
pub struct BlockTarget<'a> {
  reference: &'a Frame,
  x0: i64,
  y0: i64,
  edge: usize,
  luma: Vec<u8>,
  chroma: Option<[Vec<u8>; 2]>,
  predictor: MotionVector,
  rd: RdParams,
}

impl<'a> BlockTarget<'a> {
  /// Block whose top-left luma sample is `(x0, y0)`.
  pub fn new(
    cur: &Frame,
    reference: &'a Frame,
    x0: usize,
    y0: usize,
    block_size: BlockSize,
    predictor: MotionVector,
    rd: RdParams,
  ) -> Self {
    let edge = block_size.pixels();
    let luma = extract_square(cur.plane(PlaneId::Y), x0 as i64, y0 as i64, edge);
    let chroma = rd.chroma_in_cost().then(|| {
      let (cx, cy, ce) = (x0 as i64 / 2, y0 as i64 / 2, edge / 2);
      [
        extract_square(cur.plane(PlaneId::U), cx, cy, ce),
        extract_square(cur.plane(PlaneId::V), cx, cy, ce),
      ]
    });
    BlockTarget { reference, x0: x0 as i64, y0: y0 as i64, edge, luma, chroma, predictor, rd }
  }

  pub fn predictor(&self) -> MotionVector {
    self.predictor
  }

  pub fn rd(&self) -> &RdParams {
    &self.rd
  }

  pub fn evaluate(&self, mv: MotionVector) -> Candidate {
    let distortion =
      sad(&self.luma, self.edge, self.reference.plane(PlaneId::Y), self.x0, self.y0, mv);
    let mut cost = rd_cost(distortion, mv, self.predictor, &self.rd);
    let mut chroma_distortion = 0;
    if let Some([u, v]) = &self.chroma {
      let cmv = mv.chroma();
      let (cx, cy, ce) = (self.x0 / 2, self.y0 / 2, self.edge / 2);
      chroma_distortion = sad(u, ce, self.reference.plane(PlaneId::U), cx, cy, cmv)
        + sad(v, ce, self.reference.plane(PlaneId::V), cx, cy, cmv);
      cost += self.rd.chroma_weight() * chroma_distortion as f64;
    }
    Candidate { mv, distortion, chroma_distortion, bits: mv_rate_bits(mv, self.predictor), cost }
  }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchResult {
  pub best: Candidate,
  /// Large-pattern iterations (zero for full search).
  pub iterations: usize,
}

impl SearchResult {
  pub fn mv(&self) -> MotionVector {
    self.best.mv
  }

  pub fn cost(&self) -> f64 {
    self.best.cost
  }
}

#[inline]
fn in_window(mv: MotionVector, window: i32) -> bool {
  mv.dx.abs() <= window && mv.dy.abs() <= window
}

const SUBPEL_STEPS: usize = 3;
const NEIGHBORS_8: [(i32, i32); 8] =
  [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

/// Quarter-pel hill climb around an integer optimum, at most three steps
/// (±0.75 px) away from it.
fn refine_subpel(target: &BlockTarget, start: Candidate, window: i32) -> Candidate {
  let anchor = start.mv;
  let mut best = start;
  for _ in 0..SUBPEL_STEPS {
    let center = best;
    for (ox, oy) in NEIGHBORS_8 {
      let mv = MotionVector::new(center.mv.dx + ox, center.mv.dy + oy);
      if (mv.dx - anchor.dx).abs() > SUBPEL_STEPS as i32
        || (mv.dy - anchor.dy).abs() > SUBPEL_STEPS as i32
        || !in_window(mv, window)
      {
        continue;
      }
      let c = target.evaluate(mv);
      if c.better_than(&best) {
        best = c;
      }
    }
    if best.mv == center.mv {
      break;
    }
  }
  best
}

/// Exhaustive integer-pel search over `[-R, R]^2`, then optional quarter-pel
/// refinement.
pub fn full_search(target: &BlockTarget, config: &SearchConfig) -> SearchResult {
  let r = config.search_range as i32;
  let mut best: Option<Candidate> = None;
  for y in -r..=r {
    for x in -r..=r {
      let c = target.evaluate(MotionVector::from_pel(x, y));
      if best.is_none_or(|b| c.better_than(&b)) {
        best = Some(c);
      }
    }
  }
  let mut best = best.expect("window is non-empty");
  if config.refine_subpel {
    best = refine_subpel(target, best, config.window());
  }
  SearchResult { best, iterations: 0 }
}

const LARGE_DIAMOND: [(i32, i32); 8] =
  [(0, -2), (-1, -1), (1, -1), (-2, 0), (2, 0), (-1, 1), (1, 1), (0, 2)];
const SMALL_DIAMOND: [(i32, i32); 4] = [(0, -1), (-1, 0), (1, 0), (0, 1)];
const LARGE_HEX: [(i32, i32); 6] = [(-1, -2), (1, -2), (-2, 0), (2, 0), (-1, 2), (1, 2)];

/// Round a quarter-pel vector to whole pixels (ties away from zero) and clamp
/// it into the window.
fn seed_to_pel(mv: MotionVector, range: i32) -> MotionVector {
  let r = |v: i32| ((v as f64 / 4.0).round() as i32).clamp(-range, range);
  MotionVector::from_pel(r(mv.dx), r(mv.dy))
}

fn pattern_search(
  target: &BlockTarget,
  config: &SearchConfig,
  seeds: &[MotionVector],
  large: &[(i32, i32)],
  small: &[(i32, i32)],
) -> SearchResult {
  let range = config.search_range as i32;
  let window = config.window();
  let mut best = target.evaluate(MotionVector::ZERO);
  for &s in seeds {
    let c = target.evaluate(seed_to_pel(s, range));
    if c.better_than(&best) {
      best = c;
    }
  }

  let step = |best: &mut Candidate, pattern: &[(i32, i32)]| {
    let center = *best;
    for &(x, y) in pattern {
      let mv = center.mv + MotionVector::from_pel(x, y);
      if !in_window(mv, window) {
        continue;
      }
      let c = target.evaluate(mv);
      if c.better_than(best) {
        *best = c;
      }
    }
    best.mv != center.mv
  };

  let mut iterations = 0;
  // every move strictly lowers the candidate order, so this terminates
  loop {
    iterations += 1;
    if !step(&mut best, large) {
      break;
    }
  }
  step(&mut best, small);

  if config.refine_subpel {
    best = refine_subpel(target, best, window);
  }
  SearchResult { best, iterations }
}

/// Large-diamond descent, small-diamond refinement. The zero vector is
/// always among the starting candidates.
pub fn diamond_search(
  target: &BlockTarget,
  config: &SearchConfig,
  seeds: &[MotionVector],
) -> SearchResult {
  pattern_search(target, config, seeds, &LARGE_DIAMOND, &SMALL_DIAMOND)
}

/// Hexagon descent followed by a square 8-neighbour refinement. The zero
/// vector is always among the starting candidates.
pub fn hex_search(
  target: &BlockTarget,
  config: &SearchConfig,
  seeds: &[MotionVector],
) -> SearchResult {
  pattern_search(target, config, seeds, &LARGE_HEX, &NEIGHBORS_8)
}

fn median3(a: i32, b: i32, c: i32) -> i32 {
  a.max(b).min(a.min(b).max(c))
}

/// Component-wise median of the left, top and top-right neighbours;
/// missing neighbours count as zero.
pub fn median_predictor(field: &BlockMotionField, col: usize, row: usize) -> MotionVector {
  let left = if col > 0 { field.get(col - 1, row) } else { MotionVector::ZERO };
  let top = if row > 0 { field.get(col, row - 1) } else { MotionVector::ZERO };
  let top_right = if row > 0 && col + 1 < field.cols() {
    field.get(col + 1, row - 1)
  } else {
    MotionVector::ZERO
  };
  MotionVector::new(median3(left.dx, top.dx, top_right.dx), median3(left.dy, top.dy, top_right.dy))
}
