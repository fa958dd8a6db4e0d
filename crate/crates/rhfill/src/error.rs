use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("schema error at `{field}`: {message}")]
    Schema { field: String, message: String },
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("{0}")]
    Core(rhfill_core::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("task failed: {0}")]
    TaskFailed(String),
    #[error("report has no tabular data")]
    NoTabularData,
}

impl CliError {
    pub fn schema(field: impl Into<String>, message: impl ToString) -> Self {
        CliError::Schema { field: field.into(), message: message.to_string() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    /// 0 pass, 1 property failure, 2 usage or input, 3 budget.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::TaskFailed(_) => 1,
            CliError::Budget(_) => 3,
            _ => 2,
        }
    }
}

impl From<rhfill_core::Error> for CliError {
    fn from(e: rhfill_core::Error) -> Self {
        match e {
            rhfill_core::Error::BudgetExceeded { what, limit } => CliError::Budget(format!("{what} (limit {limit})")),
            e => CliError::Core(e),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
