use thiserror::Error;

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),

    #[error("fixture rejected: {0}")]
    Preflight(String),

    #[error(transparent)]
    Numeric(#[from] eri_core::Error),

    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl BenchError {
    pub fn config(msg: impl Into<String>) -> Self {
        BenchError::Config(msg.into())
    }

    /// Process exit code: 2 for anything the user can fix in the config or
    /// environment, 3 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) | BenchError::Io(_) => 2,
            BenchError::Preflight(_) | BenchError::Numeric(_) | BenchError::Csv(_) | BenchError::Json(_) => 3,
        }
    }
}
