use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("solver failure: {0}")]
    Solver(#[from] kvshape::Error),

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("output encoding failure: {0}")]
    Encode(String),

    #[error("verification failed: {}", .0.join(", "))]
    Verification(Vec<String>),
}

impl CliError {
    /// 2 config, 3 solver or I/O, 4 verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Solver(_) | CliError::Io(_) | CliError::Encode(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Encode(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Encode(e.to_string())
    }
}
