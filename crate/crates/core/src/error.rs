use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("integration did not converge: estimate {estimate}, error bound {error_bound}")]
    Integration { estimate: f64, error_bound: f64 },

    #[error("root not bracketed: f({lo}) and f({hi}) have the same sign")]
    Bracket { lo: f64, hi: f64 },

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("non-finite log-likelihood at observation {index}: u = ({u1}, {u2}), delta = ({d1}, {d2})")]
    Likelihood {
        index: usize,
        u1: f64,
        u2: f64,
        d1: u8,
        d2: u8,
    },

    #[error("non-finite derivative: {0}")]
    Derivative(String),

    #[error("sampling failed: {0}")]
    Sampling(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("singular information estimate")]
    Singular,

    #[error("leave-one-out fit failed at observation {index}: {reason}")]
    LeaveOneOut { index: usize, reason: String },

    #[error("bootstrap failed: {0}")]
    Bootstrap(String),

    #[error("{0}")]
    Config(String),
}

impl Error {
    /// True for errors that stem from the statistics rather than from the input.
    pub fn is_statistical(&self) -> bool {
        !matches!(self, Error::Config(_) | Error::Domain(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
