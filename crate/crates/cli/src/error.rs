use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n{}", .0.iter().map(|p| format!("  - {p}")).collect::<Vec<_>>().join("\n"))]
    Config(Vec<String>),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot parse {}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("{0}")]
    Usage(String),

    #[error("theorem verification failed for {failed} of {total} cases")]
    TheoremFailure { failed: usize, total: usize },

    #[error(transparent)]
    Core(#[from] reglgcn::Error),
}

impl CliError {
    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }

    /// Process exit code: 1 configuration or input, 2 numeric or convergence,
    /// 3 theorem verification.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::TheoremFailure { .. } => 3,
            CliError::Core(reglgcn::Error::TheoremMismatch { .. }) => 3,
            CliError::Core(e) if e.is_numeric() => 2,
            CliError::Core(reglgcn::Error::NotSymmetric { .. }) => 2,
            _ => 1,
        }
    }
}
