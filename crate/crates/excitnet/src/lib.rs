//! Neural excitation vocoder toolkit.
//!
//! The pipeline decouples the spectral envelope from speech with linear
//! prediction, models the residual excitation with an autoregressive
//! dilated-convolution network over 8-bit mu-law codes, and reconstructs
//! speech through the LP synthesis filter. A noise-shaped baseline that
//! models the speech signal itself behind a time-invariant spectral filter
//! is included for comparison.

pub mod config;
pub mod dsp;
pub mod error;
pub mod features;
pub mod io;
pub mod net;
pub mod par;
pub mod signal;
pub mod vocoder;

pub use error::{Error, Result};
pub use signal::Signal;
