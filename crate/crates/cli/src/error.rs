use thiserror::Error;

/// Failures, grouped by the exit status they map to.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Acceptance(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 3,
            CliError::Acceptance(_) => 4,
        }
    }

    pub fn context(self, what: &str) -> Self {
        match self {
            CliError::Usage(m) => CliError::Usage(format!("{what}: {m}")),
            CliError::Validation(m) => CliError::Validation(format!("{what}: {m}")),
            CliError::Numeric(m) => CliError::Numeric(format!("{what}: {m}")),
            CliError::Acceptance(m) => CliError::Acceptance(format!("{what}: {m}")),
            CliError::Io(e) => CliError::Io(std::io::Error::new(e.kind(), format!("{what}: {e}"))),
        }
    }
}

impl From<chaoscorr::Error> for CliError {
    fn from(e: chaoscorr::Error) -> Self {
        use chaoscorr::Error as E;
        match e {
            E::Argument(_) | E::Validation(_) => CliError::Validation(e.to_string()),
            E::Numeric(_) | E::NoConvergence { .. } | E::Domain(_) => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Numeric(format!("serialization failed: {e}"))
    }
}
