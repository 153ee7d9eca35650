use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file of {len} symbols cannot be split into {parts} equal parts")]
    IndivisibleFile { len: usize, parts: usize },

    #[error("degenerate channel: {0}")]
    DegenerateChannel(String),

    #[error("unsupported regime: {0}")]
    WrongRegime(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("no generic channel found after {attempts} draws")]
    ResamplingExhausted { attempts: usize },

    #[error("inconsistent inputs: {0}")]
    InconsistentInputs(String),

    #[error("row plan failed verification: {0}")]
    PlanVerification(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("malformed library file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
