use thiserror::Error;

/// Failure classes mapped onto the process exit-code contract.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("inconsistent data: {0}")]
    Inconsistent(String),
    #[error("tolerance regression: {0}")]
    Regression(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Inconsistent(_) => 3,
            CliError::Regression(_) => 4,
        }
    }
}

impl From<mixphase::Error> for CliError {
    fn from(e: mixphase::Error) -> Self {
        use mixphase::Error as E;
        match e {
            E::InconsistentData { .. } | E::AmbiguousGeodesic { .. } => {
                CliError::Inconsistent(e.to_string())
            }
            E::Domain { .. } | E::Validation(_) | E::EmptyTrace | E::InvalidPath(_) => {
                CliError::Usage(e.to_string())
            }
        }
    }
}
