use thiserror::Error;

/// Errors raised by the emission engine and its command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid value for `{field}`: {reason}")]
    InvalidInput { field: &'static str, reason: String },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("on-resonance singularity: detuning vanishes at x = {x} with zero linewidth")]
    OnResonanceSingularity { x: f64 },

    #[error("no positive resonance root for delta = {delta}, epsilon = {epsilon}")]
    NoResonance { delta: f64, epsilon: f64 },

    #[error("vanishing resonance Jacobian at x* = {x_star}")]
    VanishingJacobian { x_star: f64 },

    #[error("integrand is not finite at {location}")]
    NonFinite { location: String },

    #[error("tabulated distribution direction {table:?} does not match requested direction {requested:?}")]
    DirectionMismatch { table: [f64; 3], requested: [f64; 3] },

    #[error("cutoff scan needs at least {needed} points in the asymptotic window, got {got}")]
    InsufficientScan { needed: usize, got: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("rejected: {0}")]
    Unregularized(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            field,
            reason: reason.into(),
        }
    }

    /// Process exit status used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput { .. }
            | Error::Config(_)
            | Error::DirectionMismatch { .. }
            | Error::Geometry(_)
            | Error::Io(_) => 2,
            Error::Unregularized(_) => 4,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
