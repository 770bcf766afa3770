use thiserror::Error;

use crate::planner::Solution;

/// Errors raised while reading or validating a map document.
#[derive(Debug, Error)]
pub enum MapError {
    #[error("malformed map document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid map: {0}")]
    Invalid(String),
}

/// Errors raised by the planner.
#[derive(Debug, Error)]
pub enum PlanError {
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
    #[error("infeasible encoding: {0}")]
    InfeasibleEncoding(String),
    #[error("no plan satisfies the constraints within the horizon")]
    Infeasible,
    #[error("search budget exhausted (gap {gap:.4})")]
    BudgetExceeded {
        /// Best plan found before the budget ran out, if any.
        incumbent: Option<Box<Solution>>,
        /// Relative optimality gap of the incumbent, `inf` when there is none.
        gap: f64,
    },
    #[error("malformed plan document: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("plan document inconsistent: {0}")]
    Document(String),
}

/// Errors raised by the reference governor and its admissible-set artifact.
#[derive(Debug, Error)]
pub enum GovernorError {
    #[error("invalid governor parameters: {0}")]
    InvalidParameters(String),
    #[error("no sampled point is admissible")]
    EmptySet,
    #[error("admissible-set index is empty")]
    EmptyIndex,
    #[error("sample budget exceeded: {requested} > {budget}")]
    Budget { requested: u64, budget: u64 },
    #[error("fingerprint mismatch: artifact {found}, expected {expected}")]
    FingerprintMismatch { expected: String, found: String },
    #[error("malformed artifact: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Errors raised by the contact simulator.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error(transparent)]
    Governor(#[from] GovernorError),
    #[error("malformed scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("trace file: {0}")]
    Csv(#[from] csv::Error),
}
