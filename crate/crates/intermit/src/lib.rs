//! Experiment harness, file formats and command line for `intermit-core`.

// `!(x > 0.0)` deliberately rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod harness;
pub mod report;
pub mod export;
pub mod cli;
