use std::path::Path;

/// Everything the command line can fail with, partitioned by exit code:
/// validation problems (2) are the caller's to fix, numeric failures (3)
/// mean the requested quantity does not exist or did not converge, and
/// I/O failures (4) are environmental.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] recfosm::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Csv {
        path: String,
        line: u64,
        message: String,
    },
    #[error("{context}: {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) if e.is_numeric() => "numeric",
            CliError::Core(_) => "validation",
            CliError::Io { .. } => "io",
            CliError::Csv { .. } => "validation",
            CliError::Json { .. } => "validation",
            CliError::Invalid(_) => "validation",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind() {
            "numeric" => 3,
            "io" => 4,
            _ => 2,
        }
    }

    /// One-line machine-readable diagnostic for standard error.
    pub fn diagnostic(&self) -> String {
        serde_json::json!({
            "error": {
                "kind": self.kind(),
                "code": self.exit_code(),
                "message": self.to_string(),
            }
        })
        .to_string()
    }
}
