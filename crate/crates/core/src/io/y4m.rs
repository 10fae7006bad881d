//! YUV4MPEG2 reader and writer, 4:2:0 only.

use std::fmt;
use std::io::{self, BufRead, Read, Write};

use thiserror::Error;

use crate::model::{Frame, ModelError, PlaneId};

const MAGIC: &str = "YUV4MPEG2";
const MAX_HEADER_LEN: usize = 1024;

#[derive(Debug, Error)]
pub enum Y4mError {
  #[error("bad magic at byte 0: expected YUV4MPEG2")]
  BadMagic,
  #[error("malformed header parameter {param:?} at byte {offset}")]
  BadParam { param: String, offset: usize },
  #[error("missing header parameter {0}")]
  MissingParam(char),
  #[error("unsupported colorspace {0:?} (only 4:2:0 is accepted)")]
  UnsupportedColorspace(String),
  #[error("frame {frame}: expected FRAME marker at byte {offset}")]
  BadFrameMarker { frame: usize, offset: usize },
  #[error("frame {frame}: payload truncated at byte {offset} ({missing} bytes missing)")]
  Truncated { frame: usize, offset: usize, missing: usize },
  #[error("frame {frame} is {got_w}x{got_h}, header says {want_w}x{want_h}")]
  DimensionMismatch { frame: usize, got_w: usize, got_h: usize, want_w: usize, want_h: usize },
  #[error(transparent)]
  Model(#[from] ModelError),
  #[error(transparent)]
  Io(#[from] io::Error),
}

/// 4:2:0 colorspace tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Colorspace {
  C420,
  C420Jpeg,
  C420Mpeg2,
  C420Paldv,
}

impl Colorspace {
  fn parse(tag: &str) -> Option<Self> {
    match tag {
      "420" => Some(Colorspace::C420),
      "420jpeg" => Some(Colorspace::C420Jpeg),
      "420mpeg2" => Some(Colorspace::C420Mpeg2),
      "420paldv" => Some(Colorspace::C420Paldv),
      _ => None,
    }
  }

  fn tag(self) -> &'static str {
    match self {
      Colorspace::C420 => "420",
      Colorspace::C420Jpeg => "420jpeg",
      Colorspace::C420Mpeg2 => "420mpeg2",
      Colorspace::C420Paldv => "420paldv",
    }
  }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational {
  pub num: u32,
  pub den: u32,
}

impl fmt::Display for Rational {
  fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    write!(f, "{}:{}", self.num, self.den)
  }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceHeader {
  pub width: usize,
  pub height: usize,
  pub frame_rate: Rational,
  pub interlace: Option<char>,
  pub aspect: Option<Rational>,
  /// `None` when the stream omits the C tag (defaults to 4:2:0).
  pub colorspace: Option<Colorspace>,
  /// Unrecognised `X` parameters, kept verbatim.
  pub extensions: Vec<String>,
}

impl SequenceHeader {
  pub fn new(width: usize, height: usize, frame_rate: Rational) -> Self {
    SequenceHeader {
      width,
      height,
      frame_rate,
      interlace: None,
      aspect: None,
      colorspace: Some(Colorspace::C420),
      extensions: Vec::new(),
    }
  }

  pub fn frame_bytes(&self) -> usize {
    self.width * self.height + 2 * (self.width / 2) * (self.height / 2)
  }

  /// Header line in canonical order, including the trailing newline.
  pub fn to_line(&self) -> String {
    let mut s = format!("{MAGIC} W{} H{} F{}", self.width, self.height, self.frame_rate);
    if let Some(i) = self.interlace {
      s.push_str(&format!(" I{i}"));
    }
    if let Some(a) = self.aspect {
      s.push_str(&format!(" A{a}"));
    }
    if let Some(c) = self.colorspace {
      s.push_str(&format!(" C{}", c.tag()));
    }
    for x in &self.extensions {
      s.push_str(&format!(" X{x}"));
    }
    s.push('\n');
    s
  }
}

fn parse_rational(s: &str) -> Option<Rational> {
  let (n, d) = s.split_once(':')?;
  Some(Rational { num: n.parse().ok()?, den: d.parse().ok()? })
}

fn parse_header(line: &str) -> Result<SequenceHeader, Y4mError> {
  let mut tokens = line.split(' ');
  if tokens.next() != Some(MAGIC) {
    return Err(Y4mError::BadMagic);
  }
  let mut offset = MAGIC.len() + 1;
  let (mut w, mut h, mut fps) = (None, None, None);
  let mut header = SequenceHeader::new(0, 0, Rational { num: 0, den: 1 });
  header.colorspace = None;
  for tok in tokens {
    let bad = || Y4mError::BadParam { param: tok.to_string(), offset };
    let mut chars = tok.chars();
    let key = chars.next().ok_or_else(bad)?;
    let val = chars.as_str();
    match key {
      'W' => w = Some(val.parse::<usize>().map_err(|_| bad())?),
      'H' => h = Some(val.parse::<usize>().map_err(|_| bad())?),
      'F' => fps = Some(parse_rational(val).filter(|r| r.den != 0).ok_or_else(bad)?),
      'I' => header.interlace = Some(val.chars().next().ok_or_else(bad)?),
      'A' => header.aspect = Some(parse_rational(val).ok_or_else(bad)?),
      'C' => {
        header.colorspace = Some(
          Colorspace::parse(val).ok_or_else(|| Y4mError::UnsupportedColorspace(val.to_string()))?,
        )
      }
      'X' => header.extensions.push(val.to_string()),
      _ => return Err(bad()),
    }
    offset += tok.len() + 1;
  }
  header.width = w.ok_or(Y4mError::MissingParam('W'))?;
  header.height = h.ok_or(Y4mError::MissingParam('H'))?;
  header.frame_rate = fps.ok_or(Y4mError::MissingParam('F'))?;
  if header.width == 0
    || header.height == 0
    || !header.width.is_multiple_of(2)
    || !header.height.is_multiple_of(2)
  {
    return Err(ModelError::BadDimensions { width: header.width, height: header.height }.into());
  }
  Ok(header)
}

/// Streaming Y4M reader; frames are decoded lazily by iteration.
pub struct Y4mReader<R: BufRead> {
  inner: R,
  header: SequenceHeader,
  offset: usize,
  next_index: usize,
  done: bool,
}

/// Parse the header and return a lazy frame reader.
pub fn read_y4m<R: BufRead>(mut inner: R) -> Result<Y4mReader<R>, Y4mError> {
  let mut line = Vec::new();
  (&mut inner).take(MAX_HEADER_LEN as u64).read_until(b'\n', &mut line)?;
  if !line.starts_with(MAGIC.as_bytes()) {
    return Err(Y4mError::BadMagic);
  }
  if line.last() != Some(&b'\n') {
    return Err(Y4mError::BadParam { param: "<unterminated header>".into(), offset: line.len() });
  }
  let text = std::str::from_utf8(&line[..line.len() - 1])
    .map_err(|_| Y4mError::BadParam { param: "<non-utf8 header>".into(), offset: 0 })?;
  let header = parse_header(text)?;
  Ok(Y4mReader { inner, header, offset: line.len(), next_index: 0, done: false })
}

impl<R: BufRead> Y4mReader<R> {
  pub fn header(&self) -> &SequenceHeader {
    &self.header
  }

  fn read_frame(&mut self) -> Result<Option<Frame>, Y4mError> {
    let frame = self.next_index;
    let mut marker = Vec::new();
    (&mut self.inner).take(MAX_HEADER_LEN as u64).read_until(b'\n', &mut marker)?;
    if marker.is_empty() {
      return Ok(None);
    }
    let valid =
      marker.last() == Some(&b'\n') && (marker == b"FRAME\n" || marker.starts_with(b"FRAME "));
    if !valid {
      return Err(Y4mError::BadFrameMarker { frame, offset: self.offset });
    }
    self.offset += marker.len();
    let (w, h) = (self.header.width, self.header.height);
    let mut buf = vec![0u8; self.header.frame_bytes()];
    let mut filled = 0;
    while filled < buf.len() {
      let n = self.inner.read(&mut buf[filled..])?;
      if n == 0 {
        return Err(Y4mError::Truncated {
          frame,
          offset: self.offset + filled,
          missing: buf.len() - filled,
        });
      }
      filled += n;
    }
    self.offset += buf.len();
    let c = (w / 2) * (h / 2);
    let v = buf.split_off(w * h + c);
    let u = buf.split_off(w * h);
    self.next_index += 1;
    Ok(Some(Frame::from_planes(w, h, frame, buf, u, v)?))
  }
}

impl<R: BufRead> Iterator for Y4mReader<R> {
  type Item = Result<Frame, Y4mError>;

  fn next(&mut self) -> Option<Self::Item> {
    if self.done {
      return None;
    }
    match self.read_frame() {
      Ok(Some(f)) => Some(Ok(f)),
      Ok(None) => {
        self.done = true;
        None
      }
      Err(e) => {
        self.done = true;
        Some(Err(e))
      }
    }
  }
}

/// Read a whole sequence into memory.
pub fn read_y4m_all<R: BufRead>(inner: R) -> Result<(SequenceHeader, Vec<Frame>), Y4mError> {
  let reader = read_y4m(inner)?;
  let header = reader.header().clone();
  let frames = reader.collect::<Result<Vec<_>, _>>()?;
  Ok((header, frames))
}

pub fn write_y4m<'a, W: Write>(
  mut out: W,
  header: &SequenceHeader,
  frames: impl IntoIterator<Item = &'a Frame>,
) -> Result<(), Y4mError> {
  out.write_all(header.to_line().as_bytes())?;
  for (i, f) in frames.into_iter().enumerate() {
    if f.width() != header.width || f.height() != header.height {
      return Err(Y4mError::DimensionMismatch {
        frame: i,
        got_w: f.width(),
        got_h: f.height(),
        want_w: header.width,
        want_h: header.height,
      });
    }
    out.write_all(b"FRAME\n")?;
    for id in PlaneId::ALL {
      out.write_all(f.plane(id).data())?;
    }
  }
  Ok(())
}
