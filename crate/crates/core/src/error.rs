use std::io;

use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum GsbmError {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("invalid scale: n must exceed 1 (got {0})")]
    InvalidScale(f64),

    #[error("gamma undefined: no intersection points")]
    GammaUndefined,

    #[error("unknown vertex id {0}")]
    UnknownVertex(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid block grid: {0}")]
    InvalidGrid(String),

    #[error("brute-force MLE supports at most {max} vertices (got {got})")]
    TooManyVertices { got: usize, max: usize },

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("malformed graph file at line {line}: {msg}")]
    GraphFormat { line: usize, msg: String },

    #[error("{}", format_config_issues(.0))]
    Config(Vec<ConfigIssue>),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// One problem found while parsing a configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    /// 1-based line number, when the issue can be tied to a line.
    pub line: Option<usize>,
    pub message: String,
}

impl std::fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.line {
            Some(line) => write!(f, "line {line}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

fn format_config_issues(issues: &[ConfigIssue]) -> String {
    let parts: Vec<String> = issues.iter().map(ToString::to_string).collect();
    format!("config error: {}", parts.join("; "))
}

pub type Result<T, E = GsbmError> = std::result::Result<T, E>;
