use thiserror::Error;

/// Errors raised by the coding chains, modem, channel and experiment layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid bit value {value} at position {index}")]
    InvalidBit { index: usize, value: u8 },

    #[error("payload must not be empty")]
    EmptyPayload,

    #[error("{what}: length {len} is not a multiple of {multiple}")]
    Misaligned {
        what: &'static str,
        len: usize,
        multiple: usize,
    },

    #[error("{what}: length {len} is shorter than the minimum {min}")]
    TooShort {
        what: &'static str,
        len: usize,
        min: usize,
    },

    #[error("oversampling factor {0} is below the minimum of 4")]
    Oversampling(usize),

    #[error("timing offset {offset:e} s exceeds one on-air symbol ({symbol:e} s)")]
    TimingOffset { offset: f64, symbol: f64 },

    #[error("transmit power must be positive, got {0}")]
    NonPositivePower(f64),

    #[error("sample rate mismatch: {0} Hz vs {1} Hz")]
    SampleRateMismatch(f64, f64),

    #[error("waveform start time {0:e} s is not on the common sample grid")]
    OffGrid(f64),

    #[error("at least {min} transmitters required, got {got}")]
    TooFewTransmitters { min: usize, got: usize },

    #[error("beating classification needs exactly 2 transmitters, got {0}")]
    PairwiseOnly(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("topology: {0}")]
    Topology(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
