//! Quantiser sweeps over (sequence, mode, q) and per-mode median curves.

use std::path::PathBuf;
use std::time::Duration;

use rayon::prelude::*;
use thiserror::Error;

use crate::codec::{encode_sequence, CodecConfig, CodecError, EncodeOutput, MotionMode};
use crate::io::records::MetricRecord;
use crate::metrics::{median_aggregate, MetricsError};
use crate::model::{Frame, RdCurve, RdPoint};
use crate::provider::{make_provider, FlowSource, ProvenanceMode};

/// Sequence label of aggregated rows.
pub const MEDIAN_LABEL: &str = "median";

#[derive(Debug, Error)]
pub enum SweepError {
  #[error("{sequence} / {mode} / q={q}: {source}")]
  Job { sequence: String, mode: MotionMode, q: u32, source: CodecError },
  #[error("bad q list {0:?}")]
  BadQList(String),
  #[error("aggregating {mode}: {source}")]
  Aggregate { mode: String, source: MetricsError },
}

/// Default sweep grid: 2 and 5 to 40 in steps of 5.
pub fn default_q_list() -> Vec<u32> {
  std::iter::once(2).chain((5..=40).step_by(5)).collect()
}

/// Parse `"2,5:5:40"`-style lists; `a:s:b` expands to a, a+s, ... ≤ b.
pub fn parse_q_list(s: &str) -> Result<Vec<u32>, SweepError> {
  let bad = || SweepError::BadQList(s.to_string());
  let mut out = Vec::new();
  for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
    let parts: Vec<u32> =
      item.split(':').map(|p| p.trim().parse().map_err(|_| bad())).collect::<Result<_, _>>()?;
    match parts[..] {
      [q] => out.push(q),
      [a, step, b] if step > 0 && a <= b => out.extend((a..=b).step_by(step as usize)),
      _ => return Err(bad()),
    }
  }
  if out.is_empty() || out.contains(&0) {
    return Err(bad());
  }
  out.sort_unstable();
  out.dedup();
  Ok(out)
}

#[derive(Debug, Clone)]
pub struct Sequence {
  pub name: String,
  pub frames: Vec<Frame>,
}

/// Where flow modes get their dense fields.
#[derive(Debug, Clone)]
pub struct FlowConfig {
  pub provenance: ProvenanceMode,
  pub flow_dir: Option<PathBuf>,
  pub estimator_cmd: Option<String>,
  pub timeout: Duration,
}

/// Encode one sequence with `config`, building a provider when the mode needs one.
pub fn run_job(
  frames: &[Frame],
  name: &str,
  config: &CodecConfig,
  flow: Option<&FlowConfig>,
) -> Result<EncodeOutput, SweepError> {
  let wrap = |source| SweepError::Job {
    sequence: name.to_string(),
    mode: config.motion_mode,
    q: config.q,
    source,
  };
  let mut provider = match flow {
    Some(f) if config.motion_mode.uses_flow() => Some(
      make_provider(
        f.provenance,
        name,
        f.flow_dir.as_deref(),
        f.estimator_cmd.as_deref(),
        f.timeout,
      )
      .map_err(|e| wrap(e.into()))?,
    ),
    _ => None,
  };
  let source = provider.as_deref_mut().map(|p| p as &mut dyn FlowSource);
  encode_sequence(frames, config, source).map_err(wrap)
}

/// One RD record per (sequence, mode, q), sorted by sequence, mode, q.
///
/// Jobs run on the rayon pool. Jobs that shell out to an external estimator
/// run one at a time.
pub fn run_sweep(
  sequences: &[Sequence],
  modes: &[MotionMode],
  qs: &[u32],
  base: &CodecConfig,
  flow: Option<&FlowConfig>,
) -> Result<Vec<MetricRecord>, SweepError> {
  let jobs: Vec<(usize, MotionMode, u32)> = sequences
    .iter()
    .enumerate()
    .flat_map(|(i, _)| modes.iter().flat_map(move |&m| qs.iter().map(move |&q| (i, m, q))))
    .collect();
  let run = |&(i, mode, q): &(usize, MotionMode, u32)| -> Result<MetricRecord, SweepError> {
    let seq = &sequences[i];
    let config = CodecConfig { q, motion_mode: mode, ..base.clone() };
    let point = run_job(&seq.frames, &seq.name, &config, flow)?.rd_point(q);
    Ok(MetricRecord {
      sequence: seq.name.clone(),
      mode: mode.name().to_string(),
      q,
      rate_bits_per_frame: point.rate,
      psnr_db: point.psnr,
    })
  };
  let external =
    |mode: MotionMode| mode.uses_flow() && flow.is_some_and(|f| f.provenance == ProvenanceMode::T2);
  let (serial, parallel): (Vec<_>, Vec<_>) = jobs.into_iter().partition(|j| external(j.1));
  let mut rows = parallel.par_iter().map(run).collect::<Result<Vec<_>, _>>()?;
  for job in &serial {
    rows.push(run(job)?);
  }
  rows.sort_by(|a, b| {
    (&a.sequence, mode_rank(&a.mode), a.q).cmp(&(&b.sequence, mode_rank(&b.mode), b.q))
  });
  Ok(rows)
}

fn mode_rank(name: &str) -> usize {
  MotionMode::ALL.iter().position(|m| m.name() == name).unwrap_or(usize::MAX)
}

/// Curve of one (sequence, mode) pair from sweep rows.
pub fn curve_of(rows: &[MetricRecord], sequence: &str, mode: &str) -> RdCurve {
  RdCurve::new(
    rows
      .iter()
      .filter(|r| r.sequence == sequence && r.mode == mode)
      .map(|r| RdPoint { q: r.q, rate: r.rate_bits_per_frame, psnr: r.psnr_db })
      .collect(),
  )
}

/// Median over sequences, one row per (mode, q), labelled [`MEDIAN_LABEL`].
pub fn aggregate(rows: &[MetricRecord]) -> Result<Vec<MetricRecord>, SweepError> {
  let mut modes: Vec<&str> = rows.iter().map(|r| r.mode.as_str()).collect();
  modes.sort_by_key(|m| (mode_rank(m), *m));
  modes.dedup();
  let mut out = Vec::new();
  for mode in modes {
    let mut names: Vec<&str> =
      rows.iter().filter(|r| r.mode == mode).map(|r| r.sequence.as_str()).collect();
    names.sort_unstable();
    names.dedup();
    let curves: Vec<RdCurve> = names.iter().map(|s| curve_of(rows, s, mode)).collect();
    let median = median_aggregate(&curves)
      .map_err(|source| SweepError::Aggregate { mode: mode.to_string(), source })?;
    out.extend(median.points().iter().map(|p| MetricRecord {
      sequence: MEDIAN_LABEL.to_string(),
      mode: mode.to_string(),
      q: p.q,
      rate_bits_per_frame: p.rate,
      psnr_db: p.psnr,
    }));
  }
  Ok(out)
}

#[cfg(test)]
mod tests {
  use super::*;

  #[test]
  fn q_lists() {
    assert_eq!(default_q_list(), vec![2, 5, 10, 15, 20, 25, 30, 35, 40]);
    assert_eq!(parse_q_list("2,5:5:40").unwrap(), default_q_list());
    assert_eq!(parse_q_list("5:10:45").unwrap(), vec![5, 15, 25, 35, 45]);
    assert_eq!(parse_q_list("9, 3,3").unwrap(), vec![3, 9]);
    for bad in ["", "0", "a", "5:0:10", "10:5:1", "1:2"] {
      assert!(parse_q_list(bad).is_err(), "{bad}");
    }
  }

  fn row(seq: &str, mode: &str, q: u32, rate: f64) -> MetricRecord {
    MetricRecord {
      sequence: seq.into(),
      mode: mode.into(),
      q,
      rate_bits_per_frame: rate,
      psnr_db: 30.0 + rate,
    }
  }

  #[test]
  fn aggregate_one_row_per_mode_and_q() {
    let rows: Vec<_> = ["a", "b", "c"]
      .iter()
      .enumerate()
      .flat_map(|(i, s)| {
        ["zero", "internal-hex"]
          .into_iter()
          .flat_map(move |m| [5, 10].map(|q| row(s, m, q, (10 * (i + 1)) as f64)))
      })
      .collect();
    let agg = aggregate(&rows).unwrap();
    assert_eq!(agg.len(), 4);
    assert_eq!(agg[0].mode, "zero");
    assert!(agg.iter().all(|r| r.rate_bits_per_frame == 20.0 && r.sequence == MEDIAN_LABEL));
  }

  #[test]
  fn sweep_rows_sorted() {
    let frames: Vec<Frame> = (0..2).map(|i| Frame::new(16, 16, i).unwrap()).collect();
    let seqs = [Sequence { name: "s".into(), frames }];
    let modes = [MotionMode::InternalHex, MotionMode::Zero];
    let rows = run_sweep(&seqs, &modes, &[10, 5], &CodecConfig::default(), None).unwrap();
    let keys: Vec<_> = rows.iter().map(|r| (r.mode.as_str(), r.q)).collect();
    assert_eq!(keys, [("zero", 5), ("zero", 10), ("internal-hex", 5), ("internal-hex", 10)]);
  }
}
