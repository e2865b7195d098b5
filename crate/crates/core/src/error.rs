use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("support mismatch: {0}")]
    Support(String),
    #[error("infeasible interval: {0}")]
    Infeasible(String),
    #[error("negative mass {value} at x = {x} (c_C = {c_const})")]
    Negativity {
        x: u64,
        value: String,
        c_const: String,
    },
    #[error("singular linear system: {0}")]
    Singular(String),
    #[error("dimension too large: {0}")]
    Dimension(String),
    #[error("hypothesis violated: {0}")]
    Hypothesis(String),
    #[error("condition violated: {0}")]
    Condition(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
