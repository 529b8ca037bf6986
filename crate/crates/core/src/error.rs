use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shot series must contain at least one shot")]
    EmptySeries,

    #[error("paired arms differ in length ({arm1} vs {arm2})")]
    LengthMismatch { arm1: usize, arm2: usize },

    #[error("estimator undefined: mean count is zero")]
    ZeroMean,

    #[error("mean photon number must be non-negative and finite, got {0}")]
    NegativeMean(f64),

    #[error("invalid source spec: {0}")]
    InvalidSpec(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} = {value} outside [{low}, {high}]")]
    OutOfRange {
        what: &'static str,
        value: f64,
        low: f64,
        high: f64,
    },

    #[error("histogram range is degenerate: all values equal {0}")]
    DegenerateRange(f64),

    #[error("calibration needs at least two resolved peaks, found {0}")]
    NoPeaks(usize),

    #[error("peak spacing irregular: {distance} deviates more than 25% from median {median}")]
    IrregularSpacing { distance: f64, median: f64 },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path} at line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },
}

impl Error {
    /// Process exit code for the CLI: 2 config, 3 I/O, 4 numeric / estimator.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidSpec(_) | Error::InvalidParameter(_) => 2,
            Error::Io { .. } | Error::Parse { .. } => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
