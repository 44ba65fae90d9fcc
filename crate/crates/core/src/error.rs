//! Error type shared across the estimation, assignment, and simulation layers.

use std::fmt;

/// Errors surfaced by the core library.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A real (non-shadow) case has no accredited mediator.
    AccreditationGap { case: String },
    /// A probability argument fell outside `[0, 1]`.
    InvalidProbability(f64),
    /// Numerical integration could not normalize a posterior.
    QuadratureFailure { reason: String },
    /// Too few qualifying mediators (cases >= 2) to estimate variance components.
    InsufficientData { qualifying: usize },
    /// Horizon must be at least one day.
    InvalidHorizon(u32),
    /// The QP has a real case with no incident edge, so constraint C1 cannot hold.
    Infeasible { case: String },
    /// The QP backend stopped without reaching the requested tolerance.
    SolverFailure { status: String, detail: String },
    /// Brute-force enumeration would exceed the configured combination limit.
    TooLarge { combinations: f64, limit: f64 },
    /// No duration parameters for a `(case_type, outcome)` pair.
    MissingDuration { case_type: u32, outcome: bool },
    /// A value failed domain validation (reported with context).
    Value(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::AccreditationGap { case } => {
                write!(f, "case {case} has no accredited mediator")
            }
            Error::InvalidProbability(p) => write!(f, "probability {p} outside [0, 1]"),
            Error::QuadratureFailure { reason } => write!(f, "quadrature failure: {reason}"),
            Error::InsufficientData { qualifying } => write!(
                f,
                "variance components need at least 2 mediators with 2+ cases, found {qualifying}"
            ),
            Error::InvalidHorizon(t) => write!(f, "horizon must be >= 1 day, got {t}"),
            Error::Infeasible { case } => {
                write!(f, "real case {case} has no incident edge; C1 infeasible")
            }
            Error::SolverFailure { status, detail } => {
                write!(f, "QP solver failed ({status}): {detail}")
            }
            Error::TooLarge {
                combinations,
                limit,
            } => write!(
                f,
                "enumeration of {combinations:.0} assignments exceeds limit {limit:.0}"
            ),
            Error::MissingDuration { case_type, outcome } => write!(
                f,
                "no duration parameters for case type {case_type}, outcome {}",
                u8::from(*outcome)
            ),
            Error::Value(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for Error {}

pub type Result<T> = std::result::Result<T, Error>;
