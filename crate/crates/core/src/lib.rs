//! Video-codec harness comparing block-matching motion estimation with
//! optic-flow-derived block vectors.
//!
//! The pipeline reads Y4M video and Middlebury `.flo` fields, reduces dense
//! flow to one quarter-pel vector per block, codes sequences with a small
//! closed-loop P-frame codec under one of several motion modes and reports
//! rate/distortion, Bjøntegaard deltas and flow end-point error.

pub mod bits;
pub mod block_match;
pub mod codec;
pub mod flow_adapt;
pub mod io;
pub mod metrics;
pub mod model;
pub mod provider;
pub mod sweep;
