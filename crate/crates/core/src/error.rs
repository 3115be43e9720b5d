use thiserror::Error;

use crate::numerics::NewtonReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid support state: {0}")]
    InvalidState(String),

    #[error("point x = {x} lies outside the support")]
    OutsideSupport { x: f64 },

    #[error("quadrature did not converge (value {value:e}, error estimate {error_estimate:e})")]
    Quadrature { value: f64, error_estimate: f64 },

    #[error("zero polynomial has no well-defined roots")]
    ZeroPolynomial,

    #[error("Newton iteration did not converge: residual {:e} after {} iterations", .0.residual_norm, .0.iterations)]
    NotConverged(Box<NewtonReport>),

    #[error("collision between density zeros: {0}")]
    Collision(String),

    #[error("ODE integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("degenerate minimum of the external field at x = {x} (second derivative {second:e})")]
    DegenerateMinimum { x: f64, second: f64 },

    #[error("inconsistent result: {0}")]
    Inconsistent(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn state(msg: impl Into<String>) -> Self {
        Error::InvalidState(msg.into())
    }

    pub(crate) fn inconsistent(msg: impl Into<String>) -> Self {
        Error::Inconsistent(msg.into())
    }
}
