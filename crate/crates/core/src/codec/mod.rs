//! Closed-loop P-frame codec.
//!
//! Frame 0 of every GOP is intra coded (transform of the level-shifted
//! pixels). Every other frame predicts each block from the previous
//! *reconstructed* frame displaced by one quarter-pel vector, then codes the
//! residual with an orthonormal DCT, a uniform quantiser and run-level
//! exp-Golomb codes.
//!
//! # Bitstream
//!
//! ```text
//! "FCL1"
//! u32 width, u32 height, u32 frame_count, u32 fps_num, u32 fps_den   (LE)
//! u16 q, u8 block_size, u32 gop_size, u8 motion_mode                  (LE)
//! per frame, byte aligned:
//!   1 bit   frame type (1 = intra, 0 = predicted)
//!   per block in raster order:
//!     P only: se(dx - pred_dx) se(dy - pred_dy)   quarter-pel, median predictor
//!     residual transform blocks: Y (raster), then U, then V
//!   zero padding to the next byte
//! ```
//!
//! A residual transform block is a sequence of `se(level) ue(run)` pairs in
//! zig-zag order terminated by `se(0)`. Luma uses 8×8 transforms (4×4 for
//! 4-px blocks); chroma uses `min(block/2, 8)`. Transform blocks entirely
//! outside the picture are not coded.

pub mod entropy;
pub mod transform;

use std::fmt;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::bits::{BitReader, BitWriter};
use crate::block_match::{
  diamond_search, hex_search, median_predictor, BlockTarget, Candidate, RdParams, SearchConfig,
  SearchError,
};
use crate::flow_adapt::{downsample_flow, FlowAdaptError, FlowEstimator};
use crate::metrics::psnr;
use crate::model::{
  predict_sample, BlockMotionField, BlockSize, Frame, ModelError, MotionVector, Plane, PlaneId,
  RdPoint, DEFAULT_MV_BOUND,
};
use crate::provider::{FlowSource, ProvenanceMode, ProviderError};

use self::entropy::{read_levels, residual_bits, write_levels, EntropyError};
use self::transform::{dequantize, quantize, zigzag, Dct};

pub const STREAM_MAGIC: &[u8; 4] = b"FCL1";
pub const STREAM_HEADER_BYTES: usize = 32;

/// CSV header of per-frame statistics, matching [`FrameStats`] field order.
pub const STATS_CSV_HEADER: &str =
  "frame,frame_type,bits_motion,bits_residual,bits_header,bits_total,psnr_y,psnr_u,psnr_v,psnr_combined";

/// Largest decoded vector component accepted, in quarter-pel.
const MAX_DECODED_MV: i64 = 1 << 20;

#[derive(Debug, Error)]
pub enum CodecError {
  #[error("invalid configuration: {0}")]
  Config(String),
  #[error("motion mode {0} needs a flow provider")]
  MissingFlow(MotionMode),
  #[error("provider supplies {got} flow, configuration asks for {want}")]
  ProvenanceMismatch { want: ProvenanceMode, got: ProvenanceMode },
  #[error("no frames to encode")]
  NoFrames,
  #[error("frame {0} dimensions differ from frame 0")]
  FrameMismatch(usize),
  #[error("malformed stream at bit {bit}: {reason}")]
  Malformed { bit: usize, reason: String },
  #[error("stream header does not match configuration: {0}")]
  HeaderMismatch(String),
  #[error(transparent)]
  Provider(#[from] ProviderError),
  #[error(transparent)]
  FlowAdapt(#[from] FlowAdaptError),
  #[error(transparent)]
  Search(#[from] SearchError),
  #[error(transparent)]
  Model(#[from] ModelError),
}

fn malformed(bit: usize, reason: impl Into<String>) -> CodecError {
  CodecError::Malformed { bit, reason: reason.into() }
}

impl From<EntropyError> for CodecError {
  fn from(e: EntropyError) -> Self {
    let bit = match &e {
      EntropyError::Bits(crate::bits::BitError::Eof(b) | crate::bits::BitError::Overlong(b)) => *b,
      EntropyError::RunOverflow { bit, .. } => *bit,
    };
    malformed(bit, e.to_string())
  }
}

impl From<crate::bits::BitError> for CodecError {
  fn from(e: crate::bits::BitError) -> Self {
    EntropyError::from(e).into()
  }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MotionMode {
  Zero,
  InternalDiamond,
  InternalHex,
  FlowMean,
  FlowMedian,
  HybridMean,
  HybridMedian,
}

impl MotionMode {
  pub const ALL: [MotionMode; 7] = [
    MotionMode::Zero,
    MotionMode::InternalDiamond,
    MotionMode::InternalHex,
    MotionMode::FlowMean,
    MotionMode::FlowMedian,
    MotionMode::HybridMean,
    MotionMode::HybridMedian,
  ];

  pub fn name(self) -> &'static str {
    match self {
      MotionMode::Zero => "zero",
      MotionMode::InternalDiamond => "internal-diamond",
      MotionMode::InternalHex => "internal-hex",
      MotionMode::FlowMean => "flow-mean",
      MotionMode::FlowMedian => "flow-median",
      MotionMode::HybridMean => "hybrid-mean",
      MotionMode::HybridMedian => "hybrid-median",
    }
  }

  pub fn id(self) -> u8 {
    self as u8
  }

  pub fn from_id(id: u8) -> Option<Self> {
    Self::ALL.get(id as usize).copied()
  }

  pub fn uses_flow(self) -> bool {
    matches!(
      self,
      MotionMode::FlowMean
        | MotionMode::FlowMedian
        | MotionMode::HybridMean
        | MotionMode::HybridMedian
    )
  }

  fn uses_mean(self) -> bool {
    matches!(self, MotionMode::FlowMean | MotionMode::HybridMean)
  }
}

impl fmt::Display for MotionMode {
  fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    f.write_str(self.name())
  }
}

impl FromStr for MotionMode {
  type Err = String;

  fn from_str(s: &str) -> Result<Self, Self::Err> {
    Self::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| {
      let names: Vec<_> = Self::ALL.iter().map(|m| m.name()).collect();
      format!("unknown motion mode {s:?} (expected one of {})", names.join(", "))
    })
  }
}

/// Internal estimator used by the searching and hybrid modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchPattern {
  Diamond,
  Hex,
}

impl FromStr for SearchPattern {
  type Err = String;

  fn from_str(s: &str) -> Result<Self, Self::Err> {
    match s {
      "diamond" => Ok(SearchPattern::Diamond),
      "hex" => Ok(SearchPattern::Hex),
      _ => Err(format!("unknown search pattern {s:?} (expected diamond or hex)")),
    }
  }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CodecConfig {
  pub gop_size: usize,
  pub block_size: BlockSize,
  pub q: u32,
  pub motion_mode: MotionMode,
  /// Expected provenance of the flow provider, checked when set.
  pub provenance: Option<ProvenanceMode>,
  pub search: SearchConfig,
  /// Internal candidate of the hybrid modes.
  pub hybrid_search: SearchPattern,
  /// Estimator behind the `*-median` modes.
  pub median_estimator: FlowEstimator,
  /// Bound on flow-derived vector components, quarter-pel.
  pub mv_bound: i32,
  pub chroma_in_cost: bool,
  /// Carried in the stream header for the decoder's Y4M output.
  pub frame_rate: (u32, u32),
}

impl Default for CodecConfig {
  fn default() -> Self {
    CodecConfig {
      gop_size: 100,
      block_size: BlockSize::B16,
      q: 5,
      motion_mode: MotionMode::InternalHex,
      provenance: None,
      search: SearchConfig::default(),
      hybrid_search: SearchPattern::Hex,
      median_estimator: FlowEstimator::VectorMedian,
      mv_bound: DEFAULT_MV_BOUND,
      chroma_in_cost: false,
      frame_rate: (25, 1),
    }
  }
}

impl CodecConfig {
  pub fn new(q: u32, motion_mode: MotionMode) -> Self {
    CodecConfig { q, motion_mode, ..Default::default() }
  }

  pub fn with_block_size(mut self, block_size: BlockSize) -> Self {
    self.block_size = block_size;
    self.search.block_size = block_size;
    self
  }

  pub fn validate(&self) -> Result<(), CodecError> {
    if self.gop_size == 0 {
      return Err(CodecError::Config("gop size must be at least 1".into()));
    }
    if self.q == 0 || self.q > u16::MAX as u32 {
      return Err(CodecError::Config(format!("quantiser {} out of range", self.q)));
    }
    if self.search.block_size != self.block_size {
      return Err(CodecError::Config("search block size differs from codec block size".into()));
    }
    if self.mv_bound <= 0 {
      return Err(CodecError::Config("vector bound must be positive".into()));
    }
    if self.median_estimator == FlowEstimator::Mean {
      return Err(CodecError::Config("median estimator cannot be the mean".into()));
    }
    self.search.validate()?;
    Ok(())
  }

  pub fn rd_params(&self) -> Result<RdParams, CodecError> {
    Ok(RdParams::new(self.q)?.with_chroma(self.chroma_in_cost))
  }

  fn flow_estimator(&self) -> FlowEstimator {
    if self.motion_mode.uses_mean() {
      FlowEstimator::Mean
    } else {
      self.median_estimator
    }
  }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameStats {
  pub frame: usize,
  /// `I` or `P`.
  pub frame_type: char,
  pub bits_motion: u64,
  pub bits_residual: u64,
  /// Frame-type flag plus byte-alignment padding.
  pub bits_header: u64,
  pub bits_total: u64,
  pub psnr_y: f64,
  pub psnr_u: f64,
  pub psnr_v: f64,
  pub psnr_combined: f64,
}

/// The vector chosen for one block, with the candidates that competed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockDecision {
  pub col: usize,
  pub row: usize,
  pub predictor: MotionVector,
  pub chosen: Candidate,
  /// Internal search result (searching and hybrid modes).
  pub search: Option<Candidate>,
  /// Flow-derived candidate (flow and hybrid modes).
  pub flow: Option<Candidate>,
}

impl BlockDecision {
  pub fn mv(&self) -> MotionVector {
    self.chosen.mv
  }

  pub fn bits(&self) -> u32 {
    self.chosen.bits
  }

  pub fn cost(&self) -> f64 {
    self.chosen.cost
  }
}

/// Choose the vector for one block.
///
/// Hybrid modes score exactly two candidates, the internal search result
/// and the flow vector, and keep the cheaper; equal costs keep the search
/// result.
pub fn select_block_vector(
  mode: MotionMode,
  target: &BlockTarget,
  flow_mv: Option<MotionVector>,
  config: &CodecConfig,
) -> Result<BlockDecision, CodecError> {
  let search_with = |pattern: SearchPattern| {
    let seeds = [target.predictor()];
    match pattern {
      SearchPattern::Diamond => diamond_search(target, &config.search, &seeds).best,
      SearchPattern::Hex => hex_search(target, &config.search, &seeds).best,
    }
  };
  let flow = || flow_mv.map(|mv| target.evaluate(mv)).ok_or(CodecError::MissingFlow(mode));
  let (chosen, search, flow) = match mode {
    MotionMode::Zero => (target.evaluate(MotionVector::ZERO), None, None),
    MotionMode::InternalDiamond => {
      let s = search_with(SearchPattern::Diamond);
      (s, Some(s), None)
    }
    MotionMode::InternalHex => {
      let s = search_with(SearchPattern::Hex);
      (s, Some(s), None)
    }
    MotionMode::FlowMean | MotionMode::FlowMedian => {
      let f = flow()?;
      (f, None, Some(f))
    }
    MotionMode::HybridMean | MotionMode::HybridMedian => {
      let f = flow()?;
      let s = search_with(config.hybrid_search);
      (if f.cost < s.cost { f } else { s }, Some(s), Some(f))
    }
  };
  Ok(BlockDecision { col: 0, row: 0, predictor: target.predictor(), chosen, search, flow })
}

/// Predict the block at `(col, row)` of `out` from `reference` displaced by
/// `mv` (luma) and by the halved vector on the chroma grid.
fn compensate_block(
  reference: &Frame,
  mv: MotionVector,
  col: usize,
  row: usize,
  b: usize,
  out: &mut Frame,
) {
  for id in PlaneId::ALL {
    let (edge, v) = if id.is_chroma() { (b / 2, mv.chroma()) } else { (b, mv) };
    let src = reference.plane(id);
    let dst = out.plane_mut(id);
    let (x0, y0) = (col * edge, row * edge);
    for y in y0..(y0 + edge).min(dst.height()) {
      for x in x0..(x0 + edge).min(dst.width()) {
        let s = predict_sample(src, 4 * x as i64 + v.dx as i64, 4 * y as i64 + v.dy as i64);
        dst.set(x, y, s);
      }
    }
  }
}

/// Motion-compensated prediction of a whole frame.
pub fn motion_compensate(reference: &Frame, field: &BlockMotionField) -> Frame {
  assert!(field.matches(reference), "block field does not cover the reference frame");
  let b = field.block_size().pixels();
  let mut out = reference.clone();
  for row in 0..field.rows() {
    for col in 0..field.cols() {
      compensate_block(reference, field.get(col, row), col, row, b, &mut out);
    }
  }
  out
}

struct Transforms {
  sizes: [(Dct, Vec<usize>); 3],
}

impl Transforms {
  fn new() -> Self {
    Transforms { sizes: [2, 4, 8].map(|n| (Dct::new(n), zigzag(n))) }
  }

  fn get(&self, n: usize) -> (&Dct, &[usize]) {
    let (d, z) = &self.sizes[n.trailing_zeros() as usize - 1];
    (d, z)
  }
}

/// Transform blocks covering one block of one plane: `(x, y, n)`.
fn tx_blocks(
  plane: &Plane,
  id: PlaneId,
  col: usize,
  row: usize,
  b: usize,
) -> Vec<(usize, usize, usize)> {
  let edge = if id.is_chroma() { b / 2 } else { b };
  let n = edge.min(8);
  let (x0, y0) = (col * edge, row * edge);
  let mut out = Vec::new();
  for ty in (0..edge).step_by(n) {
    for tx in (0..edge).step_by(n) {
      let (x, y) = (x0 + tx, y0 + ty);
      if x < plane.width() && y < plane.height() {
        out.push((x, y, n));
      }
    }
  }
  out
}

fn reconstruct_tx(
  levels: &[i32],
  q: u32,
  dct: &Dct,
  pred: &Plane,
  recon: &mut Plane,
  x0: usize,
  y0: usize,
) {
  let n = dct.size();
  let r = dct.inverse(&dequantize(levels, q));
  for y in y0..(y0 + n).min(pred.height()) {
    for x in x0..(x0 + n).min(pred.width()) {
      let v = pred.get(x, y) as f64 + r[(y - y0) * n + (x - x0)];
      recon.set(x, y, v.round().clamp(0.0, 255.0) as u8);
    }
  }
}

#[allow(clippy::too_many_arguments)]
fn encode_tx(
  w: &mut BitWriter,
  tf: &Transforms,
  q: u32,
  cur: &Plane,
  pred: &Plane,
  recon: &mut Plane,
  x0: usize,
  y0: usize,
  n: usize,
) -> u64 {
  let (dct, scan) = tf.get(n);
  let mut residual = vec![0.0; n * n];
  for y in y0..(y0 + n).min(cur.height()) {
    for x in x0..(x0 + n).min(cur.width()) {
      residual[(y - y0) * n + (x - x0)] = cur.get(x, y) as f64 - pred.get(x, y) as f64;
    }
  }
  let levels = quantize(&dct.forward(&residual), q);
  let scanned: Vec<i32> = scan.iter().map(|&i| levels[i]).collect();
  write_levels(w, &scanned);
  reconstruct_tx(&levels, q, dct, pred, recon, x0, y0);
  residual_bits(&scanned) as u64
}

#[allow(clippy::too_many_arguments)]
fn decode_tx(
  r: &mut BitReader,
  tf: &Transforms,
  q: u32,
  pred: &Plane,
  recon: &mut Plane,
  x0: usize,
  y0: usize,
  n: usize,
) -> Result<(), CodecError> {
  let (dct, scan) = tf.get(n);
  let scanned = read_levels(r, n * n)?;
  let mut levels = vec![0i32; n * n];
  for (k, &i) in scan.iter().enumerate() {
    levels[i] = scanned[k];
  }
  reconstruct_tx(&levels, q, dct, pred, recon, x0, y0);
  Ok(())
}

/// Code the residual of every transform block of block `(col, row)`.
#[allow(clippy::too_many_arguments)]
fn encode_block_residual(
  w: &mut BitWriter,
  tf: &Transforms,
  q: u32,
  cur: &Frame,
  pred: &Frame,
  recon: &mut Frame,
  col: usize,
  row: usize,
  b: usize,
) -> u64 {
  let mut bits = 0;
  for id in PlaneId::ALL {
    for (x, y, n) in tx_blocks(cur.plane(id), id, col, row, b) {
      bits += encode_tx(w, tf, q, cur.plane(id), pred.plane(id), recon.plane_mut(id), x, y, n);
    }
  }
  bits
}

#[allow(clippy::too_many_arguments)]
fn decode_block_residual(
  r: &mut BitReader,
  tf: &Transforms,
  q: u32,
  pred: &Frame,
  recon: &mut Frame,
  col: usize,
  row: usize,
  b: usize,
) -> Result<(), CodecError> {
  for id in PlaneId::ALL {
    for (x, y, n) in tx_blocks(pred.plane(id), id, col, row, b) {
      decode_tx(r, tf, q, pred.plane(id), recon.plane_mut(id), x, y, n)?;
    }
  }
  Ok(())
}

/// Everything produced by one encode.
#[derive(Debug, Clone)]
pub struct EncodeOutput {
  pub stats: Vec<FrameStats>,
  pub recon: Vec<Frame>,
  pub bitstream: Vec<u8>,
  /// Stream header size in bits.
  pub header_bits: u64,
  /// Per-frame block decisions (empty for intra frames).
  pub decisions: Vec<Vec<BlockDecision>>,
}

impl EncodeOutput {
  /// Header bits plus the bits of every frame; equals the stream length.
  pub fn total_bits(&self) -> u64 {
    self.header_bits + self.stats.iter().map(|s| s.bits_total).sum::<u64>()
  }

  /// Mean bits per frame and mean luma PSNR.
  pub fn rd_point(&self, q: u32) -> RdPoint {
    let n = self.stats.len() as f64;
    RdPoint {
      q,
      rate: self.stats.iter().map(|s| s.bits_total as f64).sum::<f64>() / n,
      psnr: self.stats.iter().map(|s| s.psnr_y).sum::<f64>() / n,
    }
  }
}

fn flat_frame(like: &Frame) -> Frame {
  Frame::new(like.width(), like.height(), like.index).expect("dimensions already validated")
}

/// Encode `frames` as I/P groups of pictures.
pub fn encode_sequence(
  frames: &[Frame],
  config: &CodecConfig,
  mut provider: Option<&mut dyn FlowSource>,
) -> Result<EncodeOutput, CodecError> {
  config.validate()?;
  let first = frames.first().ok_or(CodecError::NoFrames)?;
  if let Some(i) = frames.iter().position(|f| !f.same_dims(first)) {
    return Err(CodecError::FrameMismatch(i));
  }
  let mode = config.motion_mode;
  if mode.uses_flow() {
    let p = provider.as_deref().ok_or(CodecError::MissingFlow(mode))?;
    if let Some(want) = config.provenance {
      if p.provenance() != want {
        return Err(CodecError::ProvenanceMismatch { want, got: p.provenance() });
      }
    }
  }
  let rd = config.rd_params()?;
  let tf = Transforms::new();
  let b = config.block_size.pixels();
  let (width, height) = (first.width(), first.height());

  let mut w = BitWriter::new();
  w.write_bytes(STREAM_MAGIC);
  for v in
    [width as u32, height as u32, frames.len() as u32, config.frame_rate.0, config.frame_rate.1]
  {
    w.write_bytes(&v.to_le_bytes());
  }
  w.write_bytes(&(config.q as u16).to_le_bytes());
  w.write_bytes(&[b as u8]);
  w.write_bytes(&(config.gop_size as u32).to_le_bytes());
  w.write_bytes(&[mode.id()]);
  let header_bits = w.bit_len() as u64;
  debug_assert_eq!(header_bits, 8 * STREAM_HEADER_BYTES as u64);

  let mut recon: Vec<Frame> = Vec::with_capacity(frames.len());
  let mut stats = Vec::with_capacity(frames.len());
  let mut decisions = Vec::with_capacity(frames.len());

  for (n, cur) in frames.iter().enumerate() {
    let start = w.bit_len() as u64;
    let intra = n % config.gop_size == 0;
    w.write_bit(intra);
    let mut field = BlockMotionField::new(width, height, config.block_size);
    let mut frame_decisions = Vec::new();
    let mut out = flat_frame(cur);
    out.index = cur.index;
    let (mut bits_motion, mut bits_residual) = (0u64, 0u64);

    if intra {
      let pred = flat_frame(cur);
      for row in 0..field.rows() {
        for col in 0..field.cols() {
          bits_residual +=
            encode_block_residual(&mut w, &tf, config.q, cur, &pred, &mut out, col, row, b);
        }
      }
    } else {
      let reference = &recon[n - 1];
      let flow_blocks = match provider.as_deref_mut() {
        Some(p) if mode.uses_flow() => {
          let dense = p.get_flow(n, cur, reference)?;
          Some(downsample_flow(
            &dense,
            config.block_size,
            config.flow_estimator(),
            config.mv_bound,
          )?)
        }
        _ => None,
      };
      for row in 0..field.rows() {
        for col in 0..field.cols() {
          let predictor = median_predictor(&field, col, row);
          let target =
            BlockTarget::new(cur, reference, col * b, row * b, config.block_size, predictor, rd);
          let flow_mv = flow_blocks.as_ref().map(|f| f.get(col, row));
          let mut d = select_block_vector(mode, &target, flow_mv, config)?;
          d.col = col;
          d.row = row;
          field.set(col, row, d.mv());
          frame_decisions.push(d);
        }
      }
      let mut pred = reference.clone();
      for d in &frame_decisions {
        let mvd = d.mv() - d.predictor;
        w.write_se(mvd.dx as i64);
        w.write_se(mvd.dy as i64);
        bits_motion += d.bits() as u64;
        compensate_block(reference, d.mv(), d.col, d.row, b, &mut pred);
        bits_residual +=
          encode_block_residual(&mut w, &tf, config.q, cur, &pred, &mut out, d.col, d.row, b);
      }
    }

    let bits_header = 1 + w.align() as u64;
    let bits_total = w.bit_len() as u64 - start;
    debug_assert_eq!(bits_total, bits_motion + bits_residual + bits_header);
    let quality = psnr(cur, &out).expect("same dimensions");
    stats.push(FrameStats {
      frame: n,
      frame_type: if intra { 'I' } else { 'P' },
      bits_motion,
      bits_residual,
      bits_header,
      bits_total,
      psnr_y: quality.y,
      psnr_u: quality.u,
      psnr_v: quality.v,
      psnr_combined: quality.combined,
    });
    recon.push(out);
    decisions.push(frame_decisions);
  }

  Ok(EncodeOutput { stats, recon, bitstream: w.into_bytes(), header_bits, decisions })
}

/// Parsed stream header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamHeader {
  pub width: usize,
  pub height: usize,
  pub frame_count: usize,
  pub frame_rate: (u32, u32),
  pub q: u32,
  pub block_size: BlockSize,
  pub gop_size: usize,
  pub motion_mode: MotionMode,
}

fn parse_header(bytes: &[u8]) -> Result<StreamHeader, CodecError> {
  if bytes.len() < STREAM_HEADER_BYTES {
    return Err(malformed(8 * bytes.len(), "stream header truncated"));
  }
  if &bytes[..4] != STREAM_MAGIC {
    return Err(malformed(0, "bad magic (expected FCL1)"));
  }
  let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
  let block =
    BlockSize::try_from(bytes[26] as usize).map_err(|e| malformed(8 * 26, e.to_string()))?;
  let mode =
    MotionMode::from_id(bytes[31]).ok_or_else(|| malformed(8 * 31, "unknown motion mode id"))?;
  let header = StreamHeader {
    width: u32_at(4) as usize,
    height: u32_at(8) as usize,
    frame_count: u32_at(12) as usize,
    frame_rate: (u32_at(16), u32_at(20)),
    q: u16::from_le_bytes([bytes[24], bytes[25]]) as u32,
    block_size: block,
    gop_size: u32_at(27) as usize,
    motion_mode: mode,
  };
  if header.q == 0 {
    return Err(malformed(8 * 24, "quantiser is zero"));
  }
  if header.gop_size == 0 {
    return Err(malformed(8 * 27, "gop size is zero"));
  }
  Frame::new(header.width, header.height, 0).map_err(|e| malformed(8 * 4, e.to_string()))?;
  Ok(header)
}

#[derive(Debug, Clone)]
pub struct DecodedStream {
  pub header: StreamHeader,
  pub frames: Vec<Frame>,
}

/// Decode a stream using only its own header.
pub fn decode_stream(bytes: &[u8]) -> Result<DecodedStream, CodecError> {
  let header = parse_header(bytes)?;
  let tf = Transforms::new();
  let b = header.block_size.pixels();
  let mut r = BitReader::at(bytes, STREAM_HEADER_BYTES);
  let mut frames: Vec<Frame> = Vec::with_capacity(header.frame_count);
  for n in 0..header.frame_count {
    let frame_start = r.position();
    let intra = r.read_bit()?;
    let mut out = Frame::new(header.width, header.height, n)?;
    let mut field = BlockMotionField::new(header.width, header.height, header.block_size);
    if intra {
      let pred = Frame::new(header.width, header.height, n)?;
      for row in 0..field.rows() {
        for col in 0..field.cols() {
          decode_block_residual(&mut r, &tf, header.q, &pred, &mut out, col, row, b)?;
        }
      }
    } else {
      let reference = frames
        .last()
        .ok_or_else(|| malformed(frame_start, "predicted frame without a reference"))?;
      let mut pred = reference.clone();
      for row in 0..field.rows() {
        for col in 0..field.cols() {
          let at = r.position();
          let predictor = median_predictor(&field, col, row);
          let (dx, dy) = (r.read_se()?, r.read_se()?);
          let mx = predictor.dx as i64 + dx;
          let my = predictor.dy as i64 + dy;
          if mx.abs() > MAX_DECODED_MV || my.abs() > MAX_DECODED_MV {
            return Err(malformed(at, format!("vector ({mx}, {my}) out of range")));
          }
          let mv = MotionVector::new(mx as i32, my as i32);
          field.set(col, row, mv);
          compensate_block(reference, mv, col, row, b, &mut pred);
          decode_block_residual(&mut r, &tf, header.q, &pred, &mut out, col, row, b)?;
        }
      }
    }
    r.align();
    frames.push(out);
  }
  if r.bits_left() > 0 {
    return Err(malformed(r.position(), format!("{} trailing bytes", r.bits_left() / 8)));
  }
  Ok(DecodedStream { header, frames })
}

/// Decode a stream produced with `config`, rejecting any header mismatch.
pub fn decode_sequence(bytes: &[u8], config: &CodecConfig) -> Result<Vec<Frame>, CodecError> {
  let header = parse_header(bytes)?;
  let mismatch = [
    (header.q != config.q, "q"),
    (header.block_size != config.block_size, "block size"),
    (header.gop_size != config.gop_size, "gop size"),
    (header.motion_mode != config.motion_mode, "motion mode"),
  ];
  if let Some((_, what)) = mismatch.iter().find(|(bad, _)| *bad) {
    return Err(CodecError::HeaderMismatch(what.to_string()));
  }
  Ok(decode_stream(bytes)?.frames)
}
