use thiserror::Error;

/// Errors raised by the simulator and analytics routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input sequence is empty")]
    EmptyInput,

    #[error("block length {block_len} too small for kernel of length {kernel_len}")]
    BlockTooShort { block_len: usize, kernel_len: usize },

    #[error("Toeplitz spine has length {got}, expected {expected}")]
    SpineLength { got: usize, expected: usize },

    #[error("variance must be non-negative, got {0}")]
    NegativeVariance(f64),

    #[error("unknown channel profile '{0}'")]
    UnknownProfile(String),

    #[error("invalid power delay profile: {0}")]
    InvalidProfile(String),

    #[error("DFT size {n} is shorter than the channel ({l} taps)")]
    DftTooShort { n: usize, l: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("symbol {index} lies outside the captured span of {available} symbols")]
    SymbolOutOfRange { index: usize, available: usize },

    #[error("ill-conditioned matrix on subcarrier {subcarrier} (condition number {cond:.3e})")]
    IllConditioned { subcarrier: usize, cond: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("result table is empty")]
    EmptyTable,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
