use std::path::{Path, PathBuf};

pub type Result<T, E = AppError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("{}: {message}", path.display())]
    Schema { path: PathBuf, message: String },
    #[error(transparent)]
    Compute(#[from] gyrocompass_core::Error),
}

impl AppError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        AppError::Io { path: path.to_path_buf(), source }
    }

    pub fn parse(path: &Path, line: usize, message: impl Into<String>) -> Self {
        AppError::Parse { path: path.to_path_buf(), line, message: message.into() }
    }

    pub fn schema(path: &Path, message: impl Into<String>) -> Self {
        AppError::Schema { path: path.to_path_buf(), message: message.into() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AppError::Usage(_) => "usage",
            AppError::Io { .. } => "io",
            AppError::Parse { .. } => "parse",
            AppError::Schema { .. } => "schema",
            AppError::Compute(_) => "compute",
        }
    }

    /// Process exit status: 2 usage, 3 io, 4 parse or schema, 5 compute.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => 2,
            AppError::Io { .. } => 3,
            AppError::Parse { .. } | AppError::Schema { .. } => 4,
            AppError::Compute(_) => 5,
        }
    }

    /// Single-line JSON object for stderr.
    pub fn to_json_line(&self) -> String {
        let line = serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string().replace('\n', " "),
        });
        line.to_string()
    }
}
