//! Reference inference for RBM neural-network quantum states and Deep SVDD
//! anomaly scoring, a bit-level simulator of a mixed-precision analog
//! in-memory computing (AIMC) accelerator for both, and the analytical and
//! measured energy/throughput/latency metrics used to compare them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aimc;
pub mod bench;
pub mod cli;
pub mod error;
pub mod io;
pub mod numeric;
pub mod perf;
pub mod ref_models;
pub mod workloads;

pub use error::{Error, Result};
