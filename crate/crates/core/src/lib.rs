//! Image-based disturbance observer for a delivery quadrotor.
//!
//! The crate covers the nonlinear plant ([`dynamics`]), the backstepping
//! baseline ([`control`]), the conventional observer ([`dob`]), the learning
//! filter and error system ([`learnfilter`]), the CNN/LSTM perception chain
//! ([`perception`]) and the three-case experiment ([`harness`]).

pub mod config;
pub mod control;
pub mod dob;
pub mod dynamics;
pub mod error;
pub mod harness;
pub mod learnfilter;
pub mod linalg;
pub mod par;
pub mod perception;
pub mod persist;

pub use error::{Error, ErrorCategory};
