use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error(
        "input mask has a zero entry (min |C_i| = 0); saturation thresholds need min |C_i| > 0"
    )]
    ZeroMaskEntry,

    #[error("spectral norm {0} is not below 1; the echo state property requires ||A||_2 < 1")]
    NotContractive(f64),

    #[error("non-finite state at step {step}")]
    NonFiniteState { step: usize },

    #[error("NaN passed to activation")]
    NanInput,

    #[error("matrix decomposition failed: {0}")]
    Decomposition(String),

    #[error("covariance system is numerically singular (ridge = {ridge:e}); try a larger ridge")]
    SingularCovariance { ridge: f64 },

    #[error("lag {tau} too large for trajectory of length {len} with state dimension {n}")]
    LagTooLarge { tau: usize, len: usize, n: usize },

    #[error("Lyapunov iteration did not converge after {iterations} iterations")]
    LyapunovDiverged { iterations: usize },

    #[error("failed to draw a non-degenerate sample after {attempts} attempts")]
    DegenerateDraw { attempts: u32 },

    #[error("config error: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("serialization error: {0}")]
    Serde(String),

    #[error("plot error on {path}: {message}")]
    Plot { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
