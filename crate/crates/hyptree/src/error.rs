use std::path::Path;

use hyptree_core::trainer::TrainError;

/// Failure of a command, split by exit status.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad configuration, missing or malformed input files.
    #[error("{0}")]
    Config(String),
    /// A computation produced non-finite values or left the manifold.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Config(format!("{}: {e}", path.display()))
    }
}

impl From<hyptree_core::Error> for CliError {
    fn from(e: hyptree_core::Error) -> Self {
        use hyptree_core::Error as E;
        match e {
            E::NonFinite
            | E::NonFiniteTerm(_)
            | E::OffManifold(_)
            | E::OutsideKleinBall(_)
            | E::DegenerateReference
            | E::DegenerateDescriptor => CliError::Numerical(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<TrainError> for CliError {
    fn from(e: TrainError) -> Self {
        match CliError::from(e.error.clone()) {
            CliError::Numerical(_) => CliError::Numerical(e.to_string()),
            CliError::Config(_) => CliError::Config(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Config(format!("invalid JSON: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Config(format!("CSV output: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
