use thiserror::Error;

/// Exit status of a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitCode {
    Success = 0,
    Config = 2,
    Validation = 3,
    Inconclusive = 4,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] dyson_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        use dyson_core::Error as E;
        match self {
            Self::Config(_) | Self::Json(_) | Self::Csv(_) | Self::Io(_) => ExitCode::Config,
            Self::Core(e) => match e {
                E::InvalidParameter { .. } | E::UnknownFamily(_) | E::InvalidSpec(_) | E::Json(_) | E::Io(_) => {
                    ExitCode::Config
                }
                _ => ExitCode::Validation,
            },
        }
    }
}
