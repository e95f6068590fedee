use thiserror::Error;

use crate::jet::JetError;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("scale factor a({t}) = {value} is not positive")]
    NonPositiveScaleFactor { t: f64, value: f64 },
    #[error("taylor model stores {stored} coefficients, order {requested} requested")]
    OrderUnavailable { stored: usize, requested: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("(Omega_k^(n))^2 not above floor for k = {k}, n = {n}: {value}")]
    FrequencySquaredNonPositive { k: u32, n: usize, value: f64 },
    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
    #[error("mode data not Wronskian-normalized (defect {0:e})")]
    NotNormalized(f64),
    #[error("step size underflow at t = {0}")]
    StepSizeUnderflow(f64),
    #[error("tolerance not met: {0}")]
    ToleranceNotMet(String),
    #[error("mode cutoff inadequate: omega_K = {omega_k} <= max E = {e_max}")]
    CutoffInadequate { omega_k: f64, e_max: f64 },
    #[error("insufficient points for fit: {got} < {need}")]
    InsufficientPoints { got: usize, need: usize },
    #[error("invalid configuration: {0}")]
    ConfigInvalid(String),
    #[error("i/o: {0}")]
    Io(String),
}
