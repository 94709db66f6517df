//! Scenario-driven front end for the `solenoid` library.
//!
//! Exit codes: 0 when every check passes, 1 when a check or convergence
//! criterion fails (outputs are still written), 2 for configuration and
//! validation errors.

pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod scenario;

pub use error::CliError;
