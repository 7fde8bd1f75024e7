//! Std companion of `sdsl-core`: run configuration, JSON/CSV formats,
//! seeded random data, rayon drivers and the command implementations behind
//! the `sdsl` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod parallel;
pub mod random;

pub use commands::{run, Command, Outcome, Verdict};
pub use config::RunConfig;
pub use error::{CliError, CliResult};
