use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("image error: {0}")]
    Image(#[from] image::ImageError),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("missing input: {0}")]
    MissingInput(PathBuf),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("window [{start_us}, {end_us}) us is outside the stream duration {duration_us} us")]
    WindowOutOfRange {
        start_us: u64,
        end_us: u64,
        duration_us: u64,
    },

    #[error("step {step_us} us does not divide window length {window_len_us} us")]
    NonDivisibleStep { window_len_us: u64, step_us: u64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error(
        "frame rate {fps} fps is below the propeller bound pi * d_prop * f_prop = {bound:.2} fps"
    )]
    FrameRateTooLow { fps: f64, bound: f64 },

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Diverged { epoch: usize },

    #[error("too few samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
