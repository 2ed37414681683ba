use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid arity: {0}")]
    InvalidArity(String),

    #[error("argument out of range: {0}")]
    OutOfRange(String),

    #[error("enumeration budget exceeded: needs {needed} elementary steps, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u64 },

    #[error("not a partite edge: {0}")]
    NotPartite(String),

    #[error("relative density undefined (empty star) at index {0}")]
    UndefinedDensity(String),

    #[error("mismatched grounds: {0}")]
    GroundMismatch(String),

    #[error("function has weight outside its declared support: {0}")]
    SupportViolation(String),

    #[error("{0} is not a prime power at or below the field cap")]
    NotPrimePower(u64),

    #[error("plane order {0} is not a perfect square")]
    NonSquareOrder(u64),

    #[error("geometry constraint violated: {0}")]
    Geometry(String),

    #[error("malformed hypergraph input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
