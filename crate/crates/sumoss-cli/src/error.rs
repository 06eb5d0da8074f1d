use thiserror::Error;

/// Exit code for configuration problems: unreadable, malformed, or
/// invalid config files and bad flag values.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for numerically degenerate models (singular covariances).
pub const EXIT_DEGENERATE: i32 = 3;
/// Exit code for placements past the half-grid capacity limit.
pub const EXIT_CAPACITY: i32 = 4;
/// Exit code for any other failure.
pub const EXIT_OTHER: i32 = 1;

/// Top-level CLI failure, bucketed by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("degeneracy error: {0}")]
    Degenerate(String),
    #[error("capacity error: {0}")]
    Capacity(String),
    #[error("{0}")]
    Other(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Degenerate(_) => EXIT_DEGENERATE,
            CliError::Capacity(_) => EXIT_CAPACITY,
            CliError::Other(_) => EXIT_OTHER,
        }
    }

    /// Wrap a planning-library error raised while building models from
    /// configuration, where every failure is the config's fault.
    pub fn from_setup(err: sumoss::Error) -> Self {
        match err {
            sumoss::Error::DegenerateCovariance(_) | sumoss::Error::DegenerateDeviation(_) => {
                CliError::Degenerate(err.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

/// Runtime errors keep their own buckets; anything unclassified is generic.
impl From<sumoss::Error> for CliError {
    fn from(err: sumoss::Error) -> Self {
        match err {
            sumoss::Error::DegenerateCovariance(_) | sumoss::Error::DegenerateDeviation(_) => {
                CliError::Degenerate(err.to_string())
            }
            sumoss::Error::Capacity { .. } => CliError::Capacity(err.to_string()),
            other => CliError::Other(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Other(err.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
