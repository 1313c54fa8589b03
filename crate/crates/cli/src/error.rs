use thiserror::Error;

/// Failures split by exit code: configuration problems exit 2, stage
/// failures exit 3.
#[derive(Debug, Error)]
pub enum CliError {
    /// The config file is missing, unparsable, or fails validation.
    #[error("config error: {0}")]
    Config(String),
    /// A pipeline stage failed after the config was accepted.
    #[error("stage `{stage}` failed: {message}")]
    Stage {
        stage: &'static str,
        message: String,
    },
}

impl CliError {
    pub fn stage(stage: &'static str, err: impl std::fmt::Display) -> Self {
        CliError::Stage {
            stage,
            message: err.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Stage { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
