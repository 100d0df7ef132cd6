use thiserror::Error;

#[derive(Debug, Error)]
pub enum MilpError {
    #[error("duplicate variable name `{0}`")]
    DuplicateVariable(String),
    #[error("duplicate row name `{0}`")]
    DuplicateRow(String),
    #[error("row `{row}` references unknown variable index {index}")]
    UnknownVariable { row: String, index: usize },
    #[error("invalid bounds for `{name}`: [{lower}, {upper}]")]
    InvalidBounds { name: String, lower: f64, upper: f64 },
    #[error("LP parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("solution parse error at line {line}: {message}")]
    SolutionParse { line: usize, message: String },
    #[error("external solver failed: {0}")]
    External(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MilpError>;
