use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    #[error("degenerate estimator: {0}")]
    DegenerateEstimator(String),

    #[error("degenerate probe: {0}")]
    DegenerateProbe(String),

    #[error("no sign change of the stationarity equation on [{lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },

    #[error("infeasible photon constraint: {0}")]
    InfeasibleConstraint(String),

    #[error("singular SLD denominator at modes ({j}, {k}), component {l}: {denominator:e}")]
    Singularity {
        j: usize,
        k: usize,
        l: usize,
        denominator: f64,
    },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("insufficient signal: {0}")]
    InsufficientSignal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
