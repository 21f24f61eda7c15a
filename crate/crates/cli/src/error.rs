use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] genbound::Error),
    #[error("{0}")]
    Usage(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    /// 2 validation/domain, 3 capacity, 4 non-separable.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(genbound::Error::Capacity { .. }) => 3,
            CliError::Core(genbound::Error::NonSeparable(_)) => 4,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => match e {
                genbound::Error::Domain(_) => "domain",
                genbound::Error::Infeasible(_) => "infeasible",
                genbound::Error::Validation(_) => "validation",
                genbound::Error::Capacity { .. } => "capacity",
                genbound::Error::NonSeparable(_) => "non_separable",
                genbound::Error::IterationLimit { .. } => "iteration_limit",
            },
            CliError::Usage(_) => "validation",
            CliError::Io(_) => "io",
            CliError::Csv(_) => "csv",
            CliError::Json(_) => "json",
        }
    }
}

pub fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}
