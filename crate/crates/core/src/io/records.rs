//! RD metrics records for plotting.
//!
//! CSV schema (version 1), fixed header row:
//!
//! ```text
//! sequence,mode,q,rate_bits_per_frame,psnr_db
//! ```
//!
//! JSON is an array of objects with the same keys.

use std::io::{self, Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const METRICS_CSV_HEADER: &str = "sequence,mode,q,rate_bits_per_frame,psnr_db";

#[derive(Debug, Error)]
pub enum RecordError {
  #[error("csv: {0}")]
  Csv(#[from] csv::Error),
  #[error("json: {0}")]
  Json(#[from] serde_json::Error),
  #[error("unexpected CSV header {0:?}")]
  BadHeader(String),
  #[error(transparent)]
  Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
  pub sequence: String,
  pub mode: String,
  pub q: u32,
  pub rate_bits_per_frame: f64,
  pub psnr_db: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricsFormat {
  Csv,
  Json,
}

impl FromStr for MetricsFormat {
  type Err = String;

  fn from_str(s: &str) -> Result<Self, Self::Err> {
    match s {
      "csv" => Ok(MetricsFormat::Csv),
      "json" => Ok(MetricsFormat::Json),
      _ => Err(format!("unknown metrics format {s:?} (expected csv or json)")),
    }
  }
}

pub fn write_metrics<W: Write>(
  out: W,
  records: &[MetricRecord],
  format: MetricsFormat,
) -> Result<(), RecordError> {
  match format {
    MetricsFormat::Csv => write_csv_with_header(out, METRICS_CSV_HEADER, records),
    MetricsFormat::Json => {
      let mut out = out;
      serde_json::to_writer_pretty(&mut out, records)?;
      out.write_all(b"\n")?;
      Ok(())
    }
  }
}

pub fn read_metrics<R: Read>(
  input: R,
  format: MetricsFormat,
) -> Result<Vec<MetricRecord>, RecordError> {
  match format {
    MetricsFormat::Json => Ok(serde_json::from_reader(input)?),
    MetricsFormat::Csv => {
      let mut rdr = csv::Reader::from_reader(input);
      let header = rdr.headers()?.iter().collect::<Vec<_>>().join(",");
      if header != METRICS_CSV_HEADER {
        return Err(RecordError::BadHeader(header));
      }
      Ok(rdr.deserialize().collect::<Result<Vec<MetricRecord>, _>>()?)
    }
  }
}

/// Serialize rows as CSV; the header line is written even when `rows` is
/// empty.
pub fn write_csv_with_header<W: Write, T: Serialize>(
  mut out: W,
  header: &str,
  rows: &[T],
) -> Result<(), RecordError> {
  writeln!(out, "{header}")?;
  let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
  for row in rows {
    wtr.serialize(row)?;
  }
  wtr.flush()?;
  Ok(())
}
