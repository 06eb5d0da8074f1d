//! Simulation and benchmark companion to the `sumoss` planning library.
//!
//! Everything IO-flavoured lives here: the strict TOML configuration
//! schema, the `sumoss` binary's subcommands, deterministic CSV/JSON
//! exports, mission-log round-tripping, and the batch experiment
//! drivers (paired method comparison, (w1, w2) sensitivity sweep).

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod verify;

pub use error::{CliError, CliResult, EXIT_CAPACITY, EXIT_CONFIG, EXIT_DEGENERATE, EXIT_OTHER};
