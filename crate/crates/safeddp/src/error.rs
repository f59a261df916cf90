use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got} (index {index})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
        index: usize,
    },

    #[error("non-finite value in {what} at component {index}")]
    NonFinite { what: &'static str, index: usize },

    #[error("{block} is singular after regularization at step {step}; increase regularization strength")]
    SingularBlock { block: &'static str, step: usize },

    #[error("backward pass failed at step {step}: {reason}")]
    BackwardPass { step: usize, reason: String },

    #[error("initial state is not strictly safe: constraint `{label}` has h = {value}")]
    UnsafeInitialState { label: String, value: f64 },

    #[error("invalid option: {0}")]
    InvalidOption(String),

    #[error("invalid cost: {0}")]
    InvalidCost(String),

    #[error("obstacle placement failed after {attempts} attempts")]
    ObstaclePlacement { attempts: usize },

    #[error("scenario mismatch: {0}")]
    ScenarioMismatch(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
