//! Run failures and their process exit codes.

use crate::config::ConfigError;
use hhqubit_core::Error as CoreError;

/// Anything that stops a run.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    /// Bad configuration or arguments.
    #[error(transparent)]
    Config(#[from] ConfigError),
    /// Failure inside the model or the numerics.
    #[error(transparent)]
    Core(#[from] CoreError),
    /// File output failed.
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
}

/// Success.
pub const EXIT_OK: i32 = 0;
/// I/O failure.
pub const EXIT_IO: i32 = 1;
/// Configuration error.
pub const EXIT_CONFIG: i32 = 2;
/// Physics-validity rejection (gap, mask, pole, no root).
pub const EXIT_PHYSICS: i32 = 3;
/// Numerical failure.
pub const EXIT_NUMERICAL: i32 = 4;

impl RunError {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Io(_) => EXIT_IO,
            RunError::Core(e) => match e {
                CoreError::InvalidParameter { .. } | CoreError::DimensionMismatch { .. } => EXIT_CONFIG,
                CoreError::GapTooSmall { .. }
                | CoreError::TooFewStates { .. }
                | CoreError::PoleProximity { .. }
                | CoreError::NoCancellation { .. }
                | CoreError::NoRootInBand
                | CoreError::FmValidityViolated { .. }
                | CoreError::SingularPoint
                | CoreError::EmptyBandAfterMask => EXIT_PHYSICS,
                _ => EXIT_NUMERICAL,
            },
        }
    }
}
