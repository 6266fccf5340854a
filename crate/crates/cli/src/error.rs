use std::path::PathBuf;

use mixfrac_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read config {}: {source}", path.display())]
    ReadConfig { path: PathBuf, source: std::io::Error },

    #[error("invalid config: {0}")]
    Config(String),

    #[error("invalid MIXFRAC_THREADS: {0}")]
    Threads(String),

    #[error("cannot write {}: {source}", path.display())]
    Write { path: PathBuf, source: std::io::Error },

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    /// 1: configuration or environment, 2: hypothesis or precondition
    /// violation, 3: numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ReadConfig { .. } | CliError::Config(_) | CliError::Threads(_) | CliError::Write { .. } => 1,
            CliError::Core(e) => match e {
                CoreError::HypothesisViolation(_) | CoreError::PreconditionViolated(_) => 2,
                CoreError::InvalidMeasure(_)
                | CoreError::InvalidGrid(_)
                | CoreError::InvalidArgument(_)
                | CoreError::DomainError(_)
                | CoreError::GridMismatch => 1,
                CoreError::IndefiniteForm { .. }
                | CoreError::ConvergenceFailure { .. }
                | CoreError::NonConvergence { .. }
                | CoreError::SingularSystem { .. }
                | CoreError::NotFound { .. } => 3,
            },
        }
    }

    /// Stable identifier for diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::ReadConfig { .. } => "ReadConfig",
            CliError::Config(_) => "Config",
            CliError::Threads(_) => "Threads",
            CliError::Write { .. } => "Write",
            CliError::Core(e) => match e {
                CoreError::InvalidMeasure(_) => "InvalidMeasure",
                CoreError::InvalidGrid(_) => "InvalidGrid",
                CoreError::InvalidArgument(_) => "InvalidArgument",
                CoreError::HypothesisViolation(_) => "HypothesisViolation",
                CoreError::GridMismatch => "GridMismatch",
                CoreError::IndefiniteForm { .. } => "IndefiniteForm",
                CoreError::ConvergenceFailure { .. } => "ConvergenceFailure",
                CoreError::NonConvergence { .. } => "NonConvergence",
                CoreError::SingularSystem { .. } => "SingularSystem",
                CoreError::DomainError(_) => "DomainError",
                CoreError::NotFound { .. } => "NotFound",
                CoreError::PreconditionViolated(_) => "PreconditionViolated",
            },
        }
    }

    /// One-line JSON diagnostic for standard error.
    pub fn diagnostic(&self) -> String {
        serde_json::json!({
            "level": "error",
            "kind": self.kind(),
            "exit": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}
