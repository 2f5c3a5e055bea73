//! File formats, sweeps and the command-line front end for `hhqubit-core`.
#![warn(missing_docs)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod sweeps;
