//! Scenario files, noise channels, rate fitting and the `lieobs` command line
//! tool built on [`lie_observer`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod noise;
pub mod rate;
pub mod run;
pub mod scenario;

use std::path::PathBuf;

/// Environment variable overriding the default output directory.
pub const OUT_DIR_ENV: &str = "LIEOBS_OUT_DIR";

pub const DEFAULT_OUT_DIR: &str = "lieobs-out";

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("{0}")]
    Validation(String),
    #[error("diverged at t = {time}: cost {cost:e}")]
    Diverged { time: f64, cost: f64 },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Invariant(String),
}

impl SimError {
    pub fn exit_code(&self) -> i32 {
        match self {
            SimError::Invariant(_) => 1,
            SimError::Validation(_) | SimError::Io { .. } => 2,
            SimError::Diverged { .. } => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SimError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<lie_observer::Error> for SimError {
    fn from(e: lie_observer::Error) -> Self {
        match e {
            lie_observer::Error::Diverged { time, cost } => SimError::Diverged { time, cost },
            other => SimError::Validation(other.to_string()),
        }
    }
}

/// `explicit`, else `$LIEOBS_OUT_DIR`, else `./lieobs-out`.
pub fn output_root(explicit: Option<PathBuf>) -> PathBuf {
    explicit
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
}
