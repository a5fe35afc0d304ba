//! Files, synthetic scene bundles, benchmarks and the command line around
//! [`hyptree_core`].
//!
//! Every command is deterministic given its configuration and seed; only
//! the benchmark timing file depends on the machine.

pub mod bench;
pub mod bundle;
pub mod cli;
pub mod config;
mod error;
pub mod formats;
pub mod pipeline;
pub mod reports;

pub use error::{CliError, Result};
