use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config keys or values.
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Numeric(#[from] fblfas_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError::Usage(message.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 2 for anything the user can fix by changing the invocation, 3 for
    /// numerical failures inside the library.
    pub fn exit_code(&self) -> u8 {
        use fblfas_core::Error as Core;
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(Core::Parameter { .. } | Core::Parse { .. }) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}
