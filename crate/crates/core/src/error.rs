use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid mixture: {0}")]
    InvalidMixture(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("sample set is empty")]
    EmptySamples,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("data has {got} values but the grid needs {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("modulation u = {u} with cutoff {cutoff} gives exponent {exponent:.3} above the overflow guard {limit}")]
    ModulationOverflow {
        u: f64,
        cutoff: f64,
        exponent: f64,
        limit: f64,
    },

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("singular value decomposition did not converge")]
    SvdNoConvergence,

    #[error("order {order} out of range for a {size}x{size} matrix")]
    OrderOutOfRange { order: usize, size: usize },

    #[error("all singular values below threshold {threshold}")]
    BelowThreshold { threshold: f64 },

    #[error("EM variance collapsed to {0:e}")]
    Collapse(f64),

    #[error("relative error undefined for a zero reference value")]
    ZeroReference,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        Error::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }
}
