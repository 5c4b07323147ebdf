//! Command-line front end for the `robust-ellipsoid` library: point and
//! document I/O and the `fit`, `subspace`, `generate`, `oracle` and `eval`
//! commands.

pub mod commands;
pub mod document;
pub mod points;

pub use commands::{run, Cli};
pub use document::{DocumentMeta, EllipsoidDocument};

/// Exit code 1: bad flags or input.
pub const EXIT_INPUT: i32 = 1;
/// Exit code 2: no candidate met the coverage floor.
pub const EXIT_INFEASIBLE: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Infeasible(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io(_) => EXIT_INPUT,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
        }
    }
}

impl From<robust_ellipsoid::Error> for CliError {
    fn from(e: robust_ellipsoid::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Thread cap from `ROBUST_ELLIPSOID_THREADS`; `0`, unset or unparsable
/// means automatic.
pub fn thread_cap() -> Option<usize> {
    std::env::var("ROBUST_ELLIPSOID_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}
