use thiserror::Error;

use crate::instance::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid instance: {0}")]
    Validation(ValidationReport),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("inconsistent design/attack pair: {0}")]
    Inconsistent(String),

    #[error("size limit exceeded: {0}")]
    SizeLimit(String),

    #[error("scenario cap exceeded: {count} scenarios, cap {cap}{hint}")]
    ScenarioCap {
        count: String,
        cap: u64,
        hint: &'static str,
    },

    #[error("infeasible spec: {0}")]
    Spec(String),

    #[error("time limit reached")]
    Timeout,

    #[error(transparent)]
    Lp(#[from] crate::lp::LpError),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
