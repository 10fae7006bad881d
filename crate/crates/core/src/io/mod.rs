//! Readers and writers for Y4M video, Middlebury flow files, PGM luma
//! exports and RD metrics tables.

pub mod flo;
pub mod pgm;
pub mod records;
pub mod y4m;

pub use flo::{parse_flo, read_flo, write_flo, FloError, FloFile};
pub use pgm::write_pgm;
pub use records::{read_metrics, write_metrics, MetricRecord, MetricsFormat, RecordError};
pub use y4m::{read_y4m, read_y4m_all, write_y4m, Rational, SequenceHeader, Y4mError, Y4mReader};
