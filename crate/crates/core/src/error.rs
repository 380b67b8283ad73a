use alloc::string::String;

/// Errors raised anywhere in the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("decode error: {0}")]
    Decode(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("insufficient trace: step {step} not reached within {intervals} intervals")]
    InsufficientTrace { step: u64, intervals: usize },
    #[error("undefined metric: {0}")]
    EmptyMetric(String),
    /// Raw frames and CNN outputs coincide, so the leakage ratio has no finite value.
    #[error("maximal leakage: CNN outputs reproduce the raw frames")]
    DegenerateLeakage,
    #[error("split too small: {0}")]
    EmptySplit(String),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

macro_rules! dim_err {
    ($($arg:tt)*) => {
        $crate::error::Error::Dimension(alloc::format!($($arg)*))
    };
}
pub(crate) use dim_err;
