use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("sieve limit {limit} needs {needed} bytes, over the memory budget of {budget} bytes")]
    LimitTooLarge {
        limit: u64,
        needed: u64,
        budget: u64,
    },

    #[error("{what} = {value} is outside the supported range {range}")]
    OutOfRange {
        what: &'static str,
        value: String,
        range: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("decay hypothesis violated at p = {prime}: |f(p) - 1| = {deviation:e} > {bound:e}")]
    DecayViolated {
        prime: u64,
        deviation: f64,
        bound: f64,
    },

    #[error("target tail {target:e} unreachable: {reason}")]
    TargetUnreachable { target: f64, reason: String },

    #[error("needs a sieve up to {needed}, but the sieve stops at {limit}")]
    SieveTooSmall { needed: u64, limit: u64 },

    #[error("cutoff {needed} exceeds the cap {cap}")]
    CutoffCap { needed: u64, cap: u64 },

    #[error("integer overflow while {0}")]
    Overflow(&'static str),

    #[error("fit needs at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn out_of_range(what: &'static str, value: impl ToString, range: impl ToString) -> Error {
    Error::OutOfRange {
        what,
        value: value.to_string(),
        range: range.to_string(),
    }
}
