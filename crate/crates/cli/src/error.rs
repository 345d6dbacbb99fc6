use hof_core::ErrorKind;
use thiserror::Error;

pub type Result<T, E = CliError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    /// A required input or artifact is missing.
    #[error("missing {what}: {}", path.display())]
    Missing {
        what: &'static str,
        path: std::path::PathBuf,
    },

    #[error(transparent)]
    Core(#[from] hof_core::Error),

    #[error(transparent)]
    Nn(#[from] hof_nn::Error),
}

impl CliError {
    pub fn missing(what: &'static str, path: impl Into<std::path::PathBuf>) -> Self {
        CliError::Missing {
            what,
            path: path.into(),
        }
    }

    /// 1 usage/config, 2 data, 3 model/runtime.
    pub fn exit_code(&self) -> i32 {
        let kind = match self {
            CliError::Config(_) => ErrorKind::Config,
            CliError::Missing { .. } => ErrorKind::Data,
            CliError::Core(e) => e.kind(),
            CliError::Nn(hof_nn::Error::Core(e)) => e.kind(),
            CliError::Nn(hof_nn::Error::UnknownBackbone(_)) => ErrorKind::Config,
            CliError::Nn(_) => ErrorKind::Model,
        };
        match kind {
            ErrorKind::Config => 1,
            ErrorKind::Data => 2,
            ErrorKind::Model => 3,
        }
    }
}
