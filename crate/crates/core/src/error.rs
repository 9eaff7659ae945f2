use thiserror::Error;

/// Errors raised by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid region: {0}")]
    InvalidRegion(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("poisson mean must be finite and non-negative, got {0}")]
    InvalidMean(f64),

    #[error("enumeration exceeded cap of {cap}")]
    CapExceeded { cap: usize },

    #[error("valid-pair count exceeded cap of {cap}")]
    PairCapExceeded { cap: usize },

    #[error("no maximizer: empty pair set")]
    NoMaximizer,

    #[error("not enough samples: need at least {needed}, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("degenerate regression input: {0}")]
    Degenerate(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
