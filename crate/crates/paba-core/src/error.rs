//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by model construction, solvers, and the simulator.
#[derive(Debug, Error)]
pub enum Error {
    /// An input violated a documented precondition or type invariant.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A channel state makes the round impossible (e.g. zero downlink rate).
    #[error("infeasible channel: {0}")]
    InfeasibleChannel(String),

    /// An allocation cannot be realized (e.g. load assigned with zero bandwidth).
    #[error("infeasible allocation: {0}")]
    InfeasibleAllocation(String),

    /// A latency budget leaves no time for uploading (non-positive denominator).
    #[error("infeasible latency: {0}")]
    InfeasibleLatency(String),

    /// An iterative solver failed to converge within its iteration budget.
    #[error("solver failure: {message} (residual {residual:.3e})")]
    SolverFailure { message: String, residual: f64 },

    /// The optimization problem has no feasible point.
    #[error("infeasible problem: {0}")]
    InfeasibleProblem(String),

    /// Configuration file or override rejected by schema validation.
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
