use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: String,
        message: String,
    },

    #[error("no instances in dataset")]
    NoInstances,

    #[error("schema violation: {0}")]
    Schema(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("graph contains a cycle: {}", format_cycle(.0))]
    Cycle(Vec<usize>),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("no feasible action")]
    NoFeasibleAction,

    #[error("time limit reached without a feasible solution")]
    Timeout,

    #[error("enumeration budget exceeded: {needed} candidates needed, limit is {limit}")]
    BudgetExceeded { needed: u128, limit: u128 },

    #[error("solver error: {0}")]
    Solver(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn format_cycle(nodes: &[usize]) -> String {
    let mut parts: Vec<String> = nodes.iter().map(|n| n.to_string()).collect();
    if let Some(first) = nodes.first() {
        parts.push(first.to_string());
    }
    parts.join(" -> ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
