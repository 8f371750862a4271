use thiserror::Error;

/// Errors raised by the numerical core.
///
/// Quadrature non-convergence is not an error: it is reported through the
/// `converged` flag on [`crate::quadrature::Integral`] so callers keep the best
/// estimate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    /// Evaluation exactly at the thermal pole ω = 0, where n_T diverges.
    #[error("thermal pole at omega = 0")]
    ThermalPole,

    /// A Boltzmann factor e^{βω} would exceed the representable range.
    #[error("Boltzmann exponent {0} exceeds the supported range (700)")]
    Overflow(f64),

    #[error("failed to parse tabulated spectrum: {0}")]
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
