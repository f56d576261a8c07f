//! Command-line orchestration for sinelab: configuration, subcommands and
//! the acceptance suite behind `sinelab verify`.

// Range checks are written as `!(x > 0.0)` on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod verify;

pub use config::{ConfigArgs, RunConfig};
pub use error::{exit, CliError};
