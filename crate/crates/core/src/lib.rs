//! Two-stage online source separation: a phase-based frequency-masking
//! beamformer that yields paired estimates of the source of interest and of
//! the cumulative interference, followed by a stacked BLSTM that refines them
//! into a time-frequency binary mask on the reference microphone.

pub mod array_sim;
pub mod audio;
pub mod beamformer;
pub mod blstm;
mod error;
pub mod eval;
pub mod pipeline;

pub use error::{Error, Result};

/// A T×F grid of binary time-frequency decisions.
pub type BinaryGrid = ndarray::Array2<bool>;
