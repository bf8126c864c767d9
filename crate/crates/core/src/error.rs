use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("field has a negative part (min = {min:e})")]
    NegativeField { min: f64 },

    #[error("Picard iteration is not contracting: deviation went from {previous:e} to {current:e} at iterate {iterate}")]
    NonContraction {
        iterate: usize,
        previous: f64,
        current: f64,
    },

    #[error("record spacing too coarse for a finite-difference derivative at t = {t}")]
    StepTooLarge { t: f64 },

    #[error("trajectory left the resolved regime at t = {t}: {reason}")]
    Blowup { t: f64, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_param(name: &'static str, value: f64, ok: bool, reason: &'static str) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}
