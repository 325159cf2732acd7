use thiserror::Error;

/// Errors raised by the simulation and analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("size error: dimension {dim} exceeds the configured maximum {max}")]
    Size { dim: usize, max: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("integration failed at t = {time} ns: {reason}")]
    Integration { time: f64, reason: String },

    #[error("steady state is ambiguous: null space has dimension {nullity}")]
    Ambiguity { nullity: usize },

    #[error("periodic regime not reached: drift {drift:e} exceeds {threshold:e}")]
    Convergence { drift: f64, threshold: f64 },

    #[error("singular transmission denominator at δ = {delta}")]
    Singularity { delta: f64 },

    #[error("fit did not converge after {iterations} iterations (residual norm {residual_norm:e})")]
    Fit { iterations: usize, residual_norm: f64 },

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("phase resolution error: jump of {jump:.3} rad between grid points {index} and {next}; use a finer grid", next = index + 1)]
    Resolution { index: usize, jump: f64 },

    #[error("peak error: {0}")]
    Peak(String),

    #[error("at sweep point {index}: {source}")]
    AtPoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(index: usize, source: Error) -> Self {
        Error::AtPoint {
            index,
            source: Box::new(source),
        }
    }

    /// The innermost error, with any sweep-point annotations stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtPoint { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
