use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    /// A property or acceptance check did not hold.
    #[error("check failed: {0}")]
    Invariant(String),
    #[error("numerical abort in {what} at step {step}")]
    Numerical { what: String, step: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Core(haegan::Error),
}

impl From<haegan::Error> for CliError {
    fn from(e: haegan::Error) -> Self {
        match e {
            haegan::Error::Config(msg) => CliError::Config(msg),
            other => CliError::Core(other),
        }
    }
}

impl From<haegan::GeometryError> for CliError {
    fn from(e: haegan::GeometryError) -> Self {
        match e {
            haegan::GeometryError::InvalidCurvature(_) => CliError::Config(e.to_string()),
            other => CliError::Core(other.into()),
        }
    }
}

impl CliError {
    /// 0 success, 1 failed check or runtime error, 2 bad configuration,
    /// 3 non-finite values during training.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical { .. } => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
