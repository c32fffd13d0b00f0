use std::fmt;

/// Where in a config file a problem was found.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub field: Option<String>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error")?;
        if let Some(line) = self.line {
            write!(f, " at line {line}")?;
        }
        if let Some(field) = &self.field {
            write!(f, " in `{field}`")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("invalid problem spec: {0}")]
    InvalidSpec(String),
    #[error("cannot parse value at row {row}, column {col}: {text:?}")]
    Parse { row: usize, col: usize, text: String },
    #[error("row {row} has {found} columns, expected {expected}")]
    RaggedRows { row: usize, expected: usize, found: usize },
    #[error("malformed report: {0}")]
    Report(String),
    #[error(transparent)]
    Solver(#[from] lsketch::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl BenchError {
    /// Process exit code: 2 for numerical failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Solver(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;
