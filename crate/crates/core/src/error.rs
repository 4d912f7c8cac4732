use std::io;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("label {label} out of range for a side of size {size}")]
    LabelOutOfRange { label: usize, size: usize },

    #[error("step {step} out of range 1..={len}")]
    StepOutOfRange { step: usize, len: usize },

    #[error("trace does not match graph: {0}")]
    TraceMismatch(String),

    #[error("invalid experiment plan: {0}")]
    InvalidPlan(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
