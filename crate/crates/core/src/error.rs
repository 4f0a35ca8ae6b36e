use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),

    #[error("argument out of domain: {0}")]
    Domain(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid additive function: {0}")]
    InvalidSpec(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("sieve limit {requested} exceeds capacity {capacity}")]
    Capacity { requested: u64, capacity: u64 },

    #[error("degenerate additive function: {0}")]
    Degenerate(String),

    #[error("series {op} requires {requirement}, constant term is {constant}")]
    SeriesPrecondition {
        op: &'static str,
        requirement: &'static str,
        constant: f64,
    },

    #[error("series is not invertible: linear coefficient is {0}")]
    NotInvertible(f64),

    #[error("order {requested} exceeds the truncation order allows (max {max})")]
    OrderTooHigh { requested: usize, max: usize },

    #[error("no saddle point below v = {limit} for delta = {delta}")]
    SaddleRange { delta: f64, limit: f64 },

    #[error("{method} is not applicable here: {reason}")]
    OutOfRange { method: &'static str, reason: String },

    #[error("gamma function pole at {0}")]
    GammaPole(f64),

    #[error("kac model: {0}")]
    Kac(String),

    #[error("zero lattice: {0}")]
    Reconstruction(String),

    #[error("zero line at real part {re} is ambiguous between candidates {candidates:?}")]
    Collision { re: f64, candidates: Vec<(u64, f64)> },

    #[error("inconsistent grids: {0}")]
    Grid(String),
}
