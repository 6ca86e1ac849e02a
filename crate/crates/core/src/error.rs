// SPDX-License-Identifier: MIT OR Apache-2.0

use thiserror::Error;

/// Errors produced by the piecewise algebra, the solvers and the front end.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid domain: lower bound {lo} is not below upper bound {hi}")]
    InvalidDomain { lo: f64, hi: f64 },

    #[error("invalid weight {0}: weights must be positive and finite")]
    InvalidWeight(f64),

    #[error("invalid data value {0} for the {1} loss")]
    InvalidValue(f64, &'static str),

    #[error("mean {mean} is outside the range [{lo}, {hi}]")]
    OutOfRange { mean: f64, lo: f64, hi: f64 },

    #[error("cost functions are defined on different domains or loss families")]
    DomainMismatch,

    #[error("piece is constant: no interior minimum")]
    NoInteriorMinimum,

    #[error("mean gap {0} is only supported for the square loss")]
    UnsupportedGap(f64),

    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),

    #[error("infeasible model: {0}")]
    Infeasible(String),

    #[error("empty data sequence")]
    EmptyData,

    #[error("inconsistent backpointers while decoding: {0}")]
    Inconsistent(String),

    #[error("invalid state graph: {0}")]
    InvalidGraph(String),

    #[error("preset {name} takes {expected} penalties, got {got}")]
    PenaltyArity {
        name: String,
        expected: usize,
        got: usize,
    },

    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("{0}")]
    Misuse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
