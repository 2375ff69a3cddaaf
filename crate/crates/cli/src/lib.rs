//! Command-line front end for the cavity solver: configuration parsing and
//! the commands behind the `cavityflow` binary.

pub mod config;
pub mod run;

pub use config::{load_config, parse_config, ConfigError, RunConfig};
pub use run::Status;
