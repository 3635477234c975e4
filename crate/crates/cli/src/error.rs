use hjbex::Error as ModelError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),

    #[error("{0}")]
    Model(#[from] ModelError),

    #[error("io: {0}")]
    Io(String),

    #[error("{failed} check(s) outside tolerance")]
    Tolerance { failed: usize },
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// Process exit status: 2 assumption, 3 tolerance, 4 state outside the
    /// feedback domain, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Model(ModelError::Assumption { .. }) => 2,
            CliError::Tolerance { .. } => 3,
            CliError::Model(ModelError::DomainExit { .. } | ModelError::Domain(_)) => 4,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
