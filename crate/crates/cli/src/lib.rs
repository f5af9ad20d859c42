//! Sweeps, single-point evaluation and the validation runner behind the
//! `steep` binary.

pub mod config;
pub mod sweep;
pub mod validation;

pub use config::{load_config, parse_config, Config, Format, Grid, Scheme, Suite, SweepSpec, ValidationConfig};
pub use sweep::{run_sweep, write_table, Row};
pub use validation::{run_validation, Check, Status, ValidationReport};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] steep_core::SteepError),
}

impl CliError {
    pub(crate) fn from_csv(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }

    /// 2 for configuration and I/O problems, and for library errors on
    /// user-supplied single points.
    pub fn exit_code(&self) -> i32 {
        2
    }
}
