use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,

    #[error("invalid argument: {0}")]
    InvalidArg(String),

    #[error("LSF conversion failed: {0}")]
    LsfConversion(String),

    #[error("invalid LSF ordering")]
    LsfOrdering,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("synthesis diverged")]
    SynthesisDiverged,

    #[error("training diverged at step {step} (loss {loss})")]
    TrainingDiverged { step: u64, loss: f64 },

    #[error("vocoder kind mismatch: checkpoint is {checkpoint}, requested {requested}")]
    KindMismatch {
        checkpoint: String,
        requested: String,
    },

    #[error("bad file format: {0}")]
    Format(String),

    #[error("{path}: {msg}")]
    File { path: String, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
