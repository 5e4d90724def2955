use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("line {line}: label `{found}` is not one of -1, +1")]
    Label { line: usize, found: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("noise model violates rho_pos + rho_neg < 1 after {attempts} draws")]
    InfeasibleNoise { attempts: usize },

    #[error("KMM feasible region is empty: cap {cap} < 1 - eps ({lower})")]
    InfeasibleKmm { cap: f64, lower: f64 },

    #[error("degenerate training set: {0}")]
    Degenerate(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
