use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid ensemble size N = {n}: must satisfy 1 <= N <= {cap}")]
    Dimension { n: usize, cap: usize },

    #[error("dimension mismatch: state has N = {state}, operators have N = {ops}")]
    DimensionMismatch { state: usize, ops: usize },

    #[error("collective state index {index} out of range 0..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unknown protocol `{0}`")]
    UnknownProtocol(String),

    #[error("protocol `{name}` violates its structure: {reason}")]
    MalformedProtocol { name: String, reason: String },

    #[error("oracle supports at most 4 atoms, got N = {0}")]
    OracleTooLarge(usize),

    #[error("invalid fidelity budget: fractional atom loss Θ = {theta:.4} >= 1")]
    BudgetInvalid { theta: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
