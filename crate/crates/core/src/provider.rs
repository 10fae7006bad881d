//! Dense flow sources for each (current, reference) frame pair.
//!
//! * T0 / T1 read `<dir>/<sequence>/frame_%04d.flo`, where the index is that
//!   of the current frame `n` and the field maps frame `n` to frame `n - 1`
//!   (backward flow). T0 and T1 share the mechanics; only the provenance of
//!   the directory differs (ground truth vs. precomputed on originals).
//! * T2 runs an external estimator on the original current luma and the
//!   decoded reference luma:
//!
//!   ```text
//!   <command...> <dir>/<seq>_<n:04>_cur.pgm <dir>/<seq>_<n:04>_ref.pgm <dir>/<seq>_<n:04>.flo
//!   ```
//!
//!   Exit status 0 means `<n:04>.flo` holds the field. The temp directory
//!   lives under `$FLOWCODEC_TMPDIR` when set and is removed afterwards.

use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::str::FromStr;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::io::flo::{read_flo, FloError};
use crate::io::pgm::write_pgm;
use crate::model::{DenseFlowField, Frame};

pub const TMPDIR_ENV: &str = "FLOWCODEC_TMPDIR";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

#[derive(Debug, Error)]
pub enum ProviderError {
  #[error("flow file {path}: {source}")]
  Flo { path: PathBuf, source: FloError },
  #[error("flow file {0} not found")]
  Missing(PathBuf),
  #[error("flow for frame {frame} is {got_w}x{got_h}, frame is {want_w}x{want_h}")]
  DimensionMismatch { frame: usize, got_w: usize, got_h: usize, want_w: usize, want_h: usize },
  #[error("estimator command is empty")]
  EmptyCommand,
  #[error("estimator `{command}` failed for frame {frame}: {status}")]
  CommandFailed { command: String, frame: usize, status: String },
  #[error("estimator `{command}` timed out after {seconds:.1} s on frame {frame}")]
  Timeout { command: String, frame: usize, seconds: f64 },
  #[error("{0} provenance requires {1}")]
  Misconfigured(ProvenanceMode, &'static str),
  #[error(transparent)]
  Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProvenanceMode {
  /// Ground-truth flow files.
  T0,
  /// Flow precomputed on the original frames.
  T1,
  /// Flow computed on the decoded reference by an external estimator.
  T2,
}

impl FromStr for ProvenanceMode {
  type Err = String;

  fn from_str(s: &str) -> Result<Self, Self::Err> {
    match s {
      "T0" | "t0" => Ok(ProvenanceMode::T0),
      "T1" | "t1" => Ok(ProvenanceMode::T1),
      "T2" | "t2" => Ok(ProvenanceMode::T2),
      _ => Err(format!("unknown provenance {s:?} (expected T0, T1 or T2)")),
    }
  }
}

impl fmt::Display for ProvenanceMode {
  fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    f.write_str(match self {
      ProvenanceMode::T0 => "T0",
      ProvenanceMode::T1 => "T1",
      ProvenanceMode::T2 => "T2",
    })
  }
}

/// Supplies the backward flow for frame `n` of one sequence.
pub trait FlowSource {
  fn provenance(&self) -> ProvenanceMode;

  /// `cur` is the original frame `n`; `ref_decoded` the reconstructed frame
  /// `n - 1`.
  fn get_flow(
    &mut self,
    n: usize,
    cur: &Frame,
    ref_decoded: &Frame,
  ) -> Result<DenseFlowField, ProviderError>;
}

pub fn flow_path(dir: &Path, sequence: &str, n: usize) -> PathBuf {
  dir.join(sequence).join(format!("frame_{n:04}.flo"))
}

fn check_dims(n: usize, field: &DenseFlowField, frame: &Frame) -> Result<(), ProviderError> {
  if field.matches(frame) {
    return Ok(());
  }
  Err(ProviderError::DimensionMismatch {
    frame: n,
    got_w: field.width(),
    got_h: field.height(),
    want_w: frame.width(),
    want_h: frame.height(),
  })
}

fn load_flo(path: &Path) -> Result<DenseFlowField, ProviderError> {
  let file = File::open(path).map_err(|e| match e.kind() {
    io::ErrorKind::NotFound => ProviderError::Missing(path.to_path_buf()),
    _ => ProviderError::Io(e),
  })?;
  read_flo(io::BufReader::new(file))
    .map(|f| f.field)
    .map_err(|source| ProviderError::Flo { path: path.to_path_buf(), source })
}

/// T0 / T1 provider backed by a flow directory.
#[derive(Debug, Clone)]
pub struct FileFlowProvider {
  mode: ProvenanceMode,
  dir: PathBuf,
  sequence: String,
}

impl FileFlowProvider {
  pub fn new(
    mode: ProvenanceMode,
    dir: impl Into<PathBuf>,
    sequence: impl Into<String>,
  ) -> Result<Self, ProviderError> {
    if mode == ProvenanceMode::T2 {
      return Err(ProviderError::Misconfigured(mode, "an estimator command, not a flow directory"));
    }
    Ok(FileFlowProvider { mode, dir: dir.into(), sequence: sequence.into() })
  }
}

impl FlowSource for FileFlowProvider {
  fn provenance(&self) -> ProvenanceMode {
    self.mode
  }

  fn get_flow(
    &mut self,
    n: usize,
    cur: &Frame,
    _ref_decoded: &Frame,
  ) -> Result<DenseFlowField, ProviderError> {
    let field = load_flo(&flow_path(&self.dir, &self.sequence, n))?;
    check_dims(n, &field, cur)?;
    Ok(field)
  }
}

/// T2 provider that shells out to an external estimator.
#[derive(Debug, Clone)]
pub struct CommandFlowProvider {
  command: Vec<String>,
  sequence: String,
  timeout: Duration,
  tmp_root: Option<PathBuf>,
}

impl CommandFlowProvider {
  /// `command` is split on whitespace; the three file arguments are appended.
  pub fn new(command: &str, sequence: impl Into<String>) -> Result<Self, ProviderError> {
    let command: Vec<String> = command.split_whitespace().map(str::to_string).collect();
    if command.is_empty() {
      return Err(ProviderError::EmptyCommand);
    }
    Ok(CommandFlowProvider {
      command,
      sequence: sequence.into(),
      timeout: DEFAULT_TIMEOUT,
      tmp_root: std::env::var_os(TMPDIR_ENV).map(PathBuf::from),
    })
  }

  pub fn with_timeout(mut self, timeout: Duration) -> Self {
    self.timeout = timeout;
    self
  }

  pub fn with_tmp_root(mut self, root: impl Into<PathBuf>) -> Self {
    self.tmp_root = Some(root.into());
    self
  }

  fn run(
    &self,
    n: usize,
    cur: &Frame,
    ref_decoded: &Frame,
  ) -> Result<DenseFlowField, ProviderError> {
    let mut builder = tempfile::Builder::new();
    builder.prefix("flowcodec-");
    let dir = match &self.tmp_root {
      Some(root) => builder.tempdir_in(root)?,
      None => builder.tempdir()?,
    };
    let stem = format!("{}_{n:04}", self.sequence);
    let cur_path = dir.path().join(format!("{stem}_cur.pgm"));
    let ref_path = dir.path().join(format!("{stem}_ref.pgm"));
    let out_path = dir.path().join(format!("{stem}.flo"));
    for (path, frame) in [(&cur_path, cur), (&ref_path, ref_decoded)] {
      let mut w = BufWriter::new(File::create(path)?);
      write_pgm(&mut w, frame.luma())?;
      w.flush()?;
    }

    let display = self.command.join(" ");
    let mut child = Command::new(&self.command[0])
      .args(&self.command[1..])
      .arg(&cur_path)
      .arg(&ref_path)
      .arg(&out_path)
      .stdin(Stdio::null())
      .stdout(Stdio::null())
      .spawn()?;
    let start = Instant::now();
    let status = loop {
      if let Some(status) = child.try_wait()? {
        break status;
      }
      if start.elapsed() >= self.timeout {
        let _ = child.kill();
        let _ = child.wait();
        return Err(ProviderError::Timeout {
          command: display,
          frame: n,
          seconds: self.timeout.as_secs_f64(),
        });
      }
      std::thread::sleep(Duration::from_millis(5));
    };
    if !status.success() {
      return Err(ProviderError::CommandFailed {
        command: display,
        frame: n,
        status: status.to_string(),
      });
    }
    let field = load_flo(&out_path)?;
    check_dims(n, &field, cur)?;
    Ok(field)
  }
}

impl FlowSource for CommandFlowProvider {
  fn provenance(&self) -> ProvenanceMode {
    ProvenanceMode::T2
  }

  fn get_flow(
    &mut self,
    n: usize,
    cur: &Frame,
    ref_decoded: &Frame,
  ) -> Result<DenseFlowField, ProviderError> {
    self.run(n, cur, ref_decoded)
  }
}

/// Build the provider for `mode` from a flow directory or estimator command.
pub fn make_provider(
  mode: ProvenanceMode,
  sequence: &str,
  flow_dir: Option<&Path>,
  estimator_cmd: Option<&str>,
  timeout: Duration,
) -> Result<Box<dyn FlowSource + Send>, ProviderError> {
  match mode {
    ProvenanceMode::T0 | ProvenanceMode::T1 => {
      let dir = flow_dir.ok_or(ProviderError::Misconfigured(mode, "--flow-dir"))?;
      Ok(Box::new(FileFlowProvider::new(mode, dir, sequence)?))
    }
    ProvenanceMode::T2 => {
      let cmd = estimator_cmd.ok_or(ProviderError::Misconfigured(mode, "--estimator-cmd"))?;
      Ok(Box::new(CommandFlowProvider::new(cmd, sequence)?.with_timeout(timeout)))
    }
  }
}
