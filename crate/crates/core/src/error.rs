use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplpoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("open facility set is empty")]
    EmptyOpenSet,

    #[error("customer {customer} is assigned to closed facility {facility}")]
    ClosedFacility { customer: usize, facility: usize },

    #[error("lambda[{customer}][{facility}] = {value} is negative")]
    NegativeMultiplier {
        customer: usize,
        facility: usize,
        value: f64,
    },

    #[error("problem is infeasible: {0}")]
    Infeasible(String),

    #[error("brute force supports at most {max} facilities, got {n}")]
    TooLarge { n: usize, max: usize },

    #[error("search limit reached before any feasible solution was found")]
    NoIncumbent,

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for SplpoError {
    fn from(e: std::io::Error) -> Self {
        SplpoError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, SplpoError>;
