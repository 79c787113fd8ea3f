use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid Lévy triplet: {0}")]
    InvalidTriplet(String),
    #[error("non-finite value in {term} term of the Lévy–Khintchine exponent at ξ = {xi:?}")]
    NonFiniteExponent { term: &'static str, xi: Vec<f64> },
    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("non-finite output in {0}")]
    NonFinite(&'static str),
    #[error("exponent overflow: Re ∫a = {value:.3e} at x = {x:?}, ξ = {xi:?}")]
    Overflow { value: f64, x: Vec<f64>, xi: Vec<f64> },
    #[error("unsupported dimension {d} for {op}")]
    Dimension { d: usize, op: &'static str },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("missing derivative table entry for multi-index {0:?}")]
    MissingDerivative(Vec<usize>),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("kernel construction failed: {0}")]
    Kernel(String),
    #[error("sampler: {0}")]
    Sampler(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
