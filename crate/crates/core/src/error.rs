use thiserror::Error;

/// Errors produced by the estimation, selection and simulation routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point {0:?} is not strictly inside the window")]
    PointOutsideWindow(Vec<f64>),

    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("at least {required} points are required, pattern has {actual}")]
    TooFewPoints { required: usize, actual: usize },

    #[error("point is not a member of the pattern")]
    NotInPattern,

    #[error("no admissible bandwidth on the candidate grid")]
    NoAdmissibleBandwidth,

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("intensity {value} exceeds the dominating bound {bound}")]
    IntensityBoundViolated { value: f64, bound: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_bandwidth(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidBandwidth(h))
    }
}
