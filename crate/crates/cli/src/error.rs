use thiserror::Error;

/// Exit codes: 0 success, 1 failed checks or a failed run, 2 invalid
/// configuration, 3 capability limit.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("capability limit: {0}")]
    Capability(String),
    #[error("run failed: {0}")]
    Run(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) => 2,
            Self::Capability(_) => 3,
            Self::Run(_) | Self::Io(_) => 1,
        }
    }

    /// Library error raised while assembling a scenario.
    pub(crate) fn setup(e: phasequant::Error) -> Self {
        match e {
            phasequant::Error::Capability(m) => Self::Capability(m),
            other => Self::Config(other.to_string()),
        }
    }

    /// Library error raised while a computation runs.
    pub(crate) fn runtime(e: phasequant::Error) -> Self {
        match e {
            phasequant::Error::Capability(m) => Self::Capability(m),
            other => Self::Run(other.to_string()),
        }
    }
}
