//! Config-driven batch runs.

pub mod config;
pub mod execute;
pub mod report;

pub use config::{parse_config, ConfigError, RunConfig};
pub use execute::{execute, ExecOptions, Outcome};
