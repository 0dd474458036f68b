//! Library surface of the experiment runner: configuration parsing,
//! dataset loading, CSV rendering, and the subcommand implementations.
//! The binary in `main.rs` is a thin argument-parsing shell over this.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod records;

/// Marker for configuration errors so the binary can map them to a
/// distinct exit code from infrastructure failures.
#[derive(Debug)]
pub struct ConfigInvalid(pub String);

impl std::fmt::Display for ConfigInvalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid configuration: {}", self.0)
    }
}

impl std::error::Error for ConfigInvalid {}
