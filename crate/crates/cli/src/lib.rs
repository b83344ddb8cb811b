//! Configuration, run modes and CSV output for the `modcool` command.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod runs;

pub use config::{parse_config, parse_config_for, RunConfig, RunMode};
pub use error::{CliError, Result};
pub use runs::{run, run_asynchronous_case, run_sweep, run_table1};
