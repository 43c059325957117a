use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid game specification: {0}")]
    InvalidSpec(String),

    #[error("no orientation direction declared")]
    NoDirection,

    #[error("game is not oriented along the declared direction {direction:?}")]
    NotOriented { direction: Vec<i64> },

    #[error("invalid environment model: {0}")]
    Model(String),

    #[error("lattice coordinate overflow while {0}")]
    Overflow(&'static str),

    #[error("work budget exceeded: {what} needs {required} cells, limit is {limit}")]
    BudgetExceeded { what: &'static str, required: u128, limit: u128 },

    #[error("brute-force oracle refused: {0}")]
    OracleTooLarge(String),

    #[error("brute-force maxmin {maxmin} differs from minmax {minmax}")]
    OracleMismatch { maxmin: String, minmax: String },

    #[error("out of range: {0}")]
    OutOfRange(String),

    #[error("invalid experiment configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
