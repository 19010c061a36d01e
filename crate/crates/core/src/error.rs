//! Crate-wide error with a coarse category used for process exit codes.

use thiserror::Error;

use crate::config::ConfigError;
use crate::control::ControlError;
use crate::dob::DobError;
use crate::dynamics::DynamicsError;
use crate::harness::HarnessError;
use crate::learnfilter::{LearnError, SynthesisError};
use crate::linalg::LinalgError;
use crate::perception::PerceptionError;
use crate::persist::PersistError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Io,
    Numerical,
    Training,
    Synthesis,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Io => 3,
            ErrorCategory::Numerical => 4,
            ErrorCategory::Training => 5,
            ErrorCategory::Synthesis => 6,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config",
            ErrorCategory::Io => "io",
            ErrorCategory::Numerical => "numerical",
            ErrorCategory::Training => "training",
            ErrorCategory::Synthesis => "synthesis",
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Persist(#[from] PersistError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error(transparent)]
    Control(#[from] ControlError),
    #[error(transparent)]
    Dob(#[from] DobError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) => ErrorCategory::Config,
            Error::Persist(e) => e.category(),
            Error::Dynamics(_)
            | Error::Control(_)
            | Error::Dob(_)
            | Error::Linalg(_)
            | Error::Learn(_) => ErrorCategory::Numerical,
            Error::Synthesis(_) => ErrorCategory::Synthesis,
            Error::Perception(e) => e.category(),
            Error::Harness(e) => e.category(),
        }
    }
}
