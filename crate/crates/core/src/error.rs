use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("no accepted draw within {attempts} attempts")]
    AttemptsExhausted { attempts: u64 },
    #[error("enumeration needs {needed:.3e} terms but the cap is {cap}")]
    CapExceeded { needed: f64, cap: u64 },
    #[error("invalid degree specification: {0}")]
    InvalidSpec(String),
    #[error("invalid weight family: {0}")]
    InvalidFamily(String),
    #[error("invalid factor graph: {0}")]
    InvalidGraph(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("distribution has zero mean")]
    ZeroMean,
    #[error("weight family violates SYM: {0}")]
    SymViolation(String),
    #[error("assumption {name} failed: {detail}")]
    AssumptionViolation { name: String, detail: String },
    #[error("normaliser underflowed while updating a population point")]
    NumericalUnderflow,
    #[error("belief propagation did not converge (last sup-norm change {change:.3e})")]
    NotConverged { change: f64 },
    #[error("simplex grid too coarse: {0}")]
    GridTooCoarse(String),
    #[error("the scan never crossed the comparator")]
    NoCrossing,
}
