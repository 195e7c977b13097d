use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("n = {n} exceeds the enumeration cap of {cap} qubits; use ckk_exists for existence checks")]
    Capability { n: usize, cap: usize },

    #[error("size mismatch: state has {state} qubits, table has {table}")]
    SizeMismatch { state: usize, table: usize },

    #[error("success probability is zero at every iteration")]
    NoSolution,

    #[error("undefined quantity: {0}")]
    Undefined(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
