use thiserror::Error;

use crate::subsets::Cell;

#[derive(Debug, Error)]
pub enum Error {
    #[error("a cell must contain at least one user")]
    EmptyCell,

    #[error("{users} users in one cell exceeds the supported maximum of {max}")]
    TooManyUsers { users: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("constraint system is infeasible")]
    Infeasible,

    #[error("dimension {dim} exceeds the supported maximum of {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("missing set-function value {function}[{mask:#b}] for cell {cell}")]
    MissingEntry { cell: Cell, function: char, mask: u32 },

    #[error("inequality list is empty")]
    EmptySystem,

    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("interference-to-noise ratio must be positive, got {0}")]
    NonPositiveInr(f64),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("joint alphabet has {states} states, more than the limit of {max}")]
    AlphabetTooLarge { states: usize, max: usize },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("no deterministic construction for K={k}, alpha={alpha}")]
    UnsupportedAlpha { k: usize, alpha: String },

    #[error("level count q={q} is incompatible with the construction: {reason}")]
    Divisibility { q: usize, reason: String },

    #[error("decoding failed at receiver {receiver}: colliding levels {levels:?}")]
    DecodingFailure { receiver: Cell, levels: Vec<usize> },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
