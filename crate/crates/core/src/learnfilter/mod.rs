//! Learning filter `L`, the error system `E` and the nominal tracking loop.
//!
//! The nominal loop runs the linear altitude model with the conventional
//! observer under a predicted disturbance `d_p` and yields the predicted error
//! `e_p`. `L` maps `e_p` to the feedforward correction `d̂ᶠ`; `E` is the
//! resulting map from `e_p` to the actual error when the plant and the
//! disturbance match their predictions.

mod error_system;
mod filter;
mod gain;
mod nominal;
mod synth;

pub use error_system::{build_error_system, ErrorSystem};
pub use filter::LearningFilter;
pub use gain::{peak_gain, PeakGain};
pub use nominal::{
    controller_block, learning_signal, nominal_run, two_norm, LoopBlocks, NominalRun,
};
pub use synth::{
    nelder_mead, synthesize_l, NelderMeadResult, Synthesis, SynthesisError, SynthesisOptions,
};

use thiserror::Error;

use crate::linalg::LinalgError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("block {block}: {detail}")]
    Dimension { block: &'static str, detail: String },
    #[error("error system is not stable (spectral radius {rho})")]
    Unstable { rho: f64 },
    #[error("nominal loop diverged at step {step}")]
    Diverged { step: usize },
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("frequency grid needs at least 2 points, got {0}")]
    GridTooSmall(usize),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
