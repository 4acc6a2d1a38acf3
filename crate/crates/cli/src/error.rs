use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] flexagg::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    pub fn parse(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        CliError::Parse { path: path.into(), message: message.to_string() }
    }

    /// Process exit code: 2 input problems, 3 size caps, 4 infeasibility,
    /// 1 anything numerical or internal.
    pub fn exit_code(&self) -> i32 {
        use flexagg::Error as E;
        match self {
            CliError::Io { .. } | CliError::Parse { .. } | CliError::Usage(_) => 2,
            CliError::Core(e) => match e {
                E::InvalidCase { .. } | E::Precondition(_) | E::OutOfBand { .. } | E::GridTooLarge { .. } => 2,
                E::SizeCap { .. } => 3,
                E::Infeasible(_) | E::StepInfeasible { .. } => 4,
                E::Invariant(_) | E::Lp(_) => 1,
            },
        }
    }
}

pub(crate) fn read(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

pub(crate) fn write(path: &std::path::Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}
