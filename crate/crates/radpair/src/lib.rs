//! Configuration files, multi-threaded ensembles, output formats and the
//! `radpair` command-line tool built on [`radpair_core`].

// `!(x > 0.0)` style checks are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod commands;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod manifest;
pub mod output;
pub mod parallel;

pub use config::SimulationConfig;
pub use error::{Error, Result};
