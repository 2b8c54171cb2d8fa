//! File formats, experiment configs and command implementations behind the
//! `gradkit` binary.

// `!(x > 0.0)` style checks are deliberate: they reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod matrix_file;

pub use error::{CliError, CliResult};
