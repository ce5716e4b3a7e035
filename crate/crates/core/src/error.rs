use alloc::string::String;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected side {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("frequency {freq} lies outside [{n}]")]
    FrequencyOutOfRange { freq: i64, n: usize },

    #[error("cannot draw {requested} distinct items from a pool of {available}")]
    SampleTooLarge { requested: usize, available: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("interpolation Gram system is singular (support of size {support} not resolved)")]
    SingularGram { support: usize },

    #[error("separation {separation} is infeasible for {count} jumps per line")]
    InfeasibleSeparation { count: usize, separation: f64 },
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
