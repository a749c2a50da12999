use std::fmt;

use thiserror::Error;

/// Which invariant a candidate value broke.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    NegativeEntry,
    SumMismatch,
    NonFinite,
}

/// Worst invariant violation found by [`crate::simplex::validate_vector`] and friends.
///
/// `location` is the offending entry for negativity, or the column index for a
/// column-sum mismatch (`None` for a vector sum).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub magnitude: f64,
    pub location: Option<(usize, usize)>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.location {
            Some((r, c)) => write!(f, "{:?} of magnitude {:e} at ({r}, {c})", self.kind, self.magnitude),
            None => write!(f, "{:?} of magnitude {:e}", self.kind, self.magnitude),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid simplex value: {0}")]
    Invalid(Violation),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("control strength {strength} outside [{lb}, {ub}]")]
    InfeasibleControl { strength: f64, lb: f64, ub: f64 },

    #[error("recovered perturbation is not a distribution ({0}); model mismatch")]
    InvalidObservation(Violation),

    #[error("population shrank from {before} to {after}; removals are not supported")]
    NegativeAddition { before: f64, after: f64 },

    #[error("matrix has no unique stationary distribution")]
    NoUniqueStationary,

    #[error("exponential weights needs a fixed scale, got [{a0}, {a_ub}]")]
    ScaleNotFixed { a0: f64, a_ub: f64 },

    #[error("lambert W0 is undefined at {0} (< -1/e)")]
    Domain(f64),

    #[error("schedule too short: need {needed} entries, have {have}")]
    ScheduleTooShort { needed: usize, have: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
