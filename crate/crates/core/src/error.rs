use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate channel: both coupling channels vanish")]
    DegenerateChannel,

    #[error("unsupported effective model: {0}")]
    UnsupportedEffectiveModel(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("step size underflow at t = {t} us (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("step budget of {max_steps} exhausted at t = {t} us")]
    StepBudgetExhausted { t: f64, max_steps: usize },

    #[error("non-finite value encountered at t = {t} us")]
    NonFinite { t: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed config: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit code for the CLI: 2 for configuration problems, 3 for
    /// numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::StepSizeUnderflow { .. }
            | Error::StepBudgetExhausted { .. }
            | Error::NonFinite { .. } => 3,
            _ => 2,
        }
    }
}
