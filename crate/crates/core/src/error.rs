use std::fmt;

use crate::algebra::GridIndex;
use crate::rational::{fmt_rational, Rational};

/// Which clause of condition (E) a scaling net violates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConditionEFailure {
    /// The net is not strictly positive at this index.
    Positivity(GridIndex),
    /// The net decreases from `k - 1` to this index `k`.
    Monotonicity(GridIndex),
    /// The sharp valuation is not zero (`None` is `+∞`).
    Valuation(Option<Rational>),
}

impl fmt::Display for ConditionEFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConditionEFailure::Positivity(k) => write!(f, "positivity at k={}", k),
            ConditionEFailure::Monotonicity(k) => write!(f, "monotonicity at k={}", k),
            ConditionEFailure::Valuation(Some(v)) => write!(f, "valuation {} != 0", fmt_rational(v)),
            ConditionEFailure::Valuation(None) => write!(f, "valuation +inf != 0"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("parse error at {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("condition (E) fails: {0}")]
    ConditionE(ConditionEFailure),
    #[error("verification failed{}: {what} at k={k}", ball.map(|i| format!(" for ball {}", i)).unwrap_or_default())]
    Verification {
        ball: Option<usize>,
        k: GridIndex,
        what: String,
    },
    #[error("balls not nested at index {index}: {what}")]
    NotNested { index: usize, what: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("contraction violated at step {step}: {what}")]
    Contraction { step: usize, what: String },
    #[error("extension check failed for test vector {index}: {what}")]
    Extension { index: usize, what: String },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

impl Error {
    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn verification(ball: Option<usize>, k: GridIndex, what: impl Into<String>) -> Self {
        Error::Verification {
            ball,
            k,
            what: what.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
