use thiserror::Error;

use crate::lp::LpStatus;

/// Violations of the domain-type invariants.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("liability ({i}, {j}) must be finite and nonnegative, got {value}")]
    NegativeLiability { i: usize, j: usize, value: f64 },
    #[error("diagonal must be zero: liability ({i}, {i}) = {value}")]
    NonzeroDiagonal { i: usize, value: f64 },
    #[error("external node {node} must owe nothing, but its row sums to {row_sum}")]
    ExternalNodeOwes { node: usize, row_sum: f64 },
    #[error("external node index {node} out of range for n = {n}")]
    ExternalNodeOutOfRange { node: usize, n: usize },
    #[error("external inflow c({t})[{i}] must be finite and nonnegative, got {value}")]
    NegativeInflow { t: usize, i: usize, value: f64 },
    #[error("horizon must be at least one period")]
    EmptyHorizon,
    #[error("interest factor alpha must be finite and >= 1, got {0}")]
    InvalidAlpha(f64),
    #[error("terminal penalty eta must lie in [0, 1), got {0}")]
    InvalidEta(f64),
    #[error("period index {t} out of range for horizon {horizon}")]
    PeriodOutOfRange { t: usize, horizon: usize },
    #[error("payment ({i}, {j}) at t = {t} is {paid}, exceeding the nominal {nominal}")]
    PaymentExceedsNominal {
        t: usize,
        i: usize,
        j: usize,
        paid: f64,
        nominal: f64,
    },
    #[error("schedule is not admissible: {0}")]
    Inadmissible(String),
}

/// Malformed linear programs.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("node {node} out of range for n = {n}")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("subset must be a proper subset of the node set")]
    ImproperSubset,
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClearingError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("linear program ended with status {status:?} ({context})")]
    Solver {
        status: LpStatus,
        context: String,
    },
    #[error("fictitious default iteration did not converge in {iterations} iterations (last step {last_step:e})")]
    NotConverged {
        iterations: usize,
        last_step: f64,
        last_iterate: Vec<f64>,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
}
