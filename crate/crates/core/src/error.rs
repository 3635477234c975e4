use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what}: need at least {min}, got {got}")]
    TooCoarse { what: &'static str, min: usize, got: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter `{name}`: {detail}")]
    InvalidParameter { name: &'static str, detail: String },

    /// A modelling assumption of the closed-form solution fails.
    #[error("{assumption}: {detail}")]
    Assumption { assumption: &'static str, detail: String },

    /// A state lies outside the region where the value function or feedback is defined.
    #[error("outside domain: {0}")]
    Domain(String),

    #[error("closed-loop trajectory left the domain at t = {t}: {detail}")]
    DomainExit { t: f64, detail: String },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("step size mismatch: expected {expected}, got {got}")]
    StepMismatch { expected: f64, got: f64 },

    #[error("search budget exceeded: {needed} nodes requested, limit {limit}")]
    BudgetExceeded { needed: usize, limit: usize },
}

impl Error {
    pub(crate) fn param(name: &'static str, detail: impl Into<String>) -> Self {
        Error::InvalidParameter { name, detail: detail.into() }
    }

    pub(crate) fn assumption(assumption: &'static str, detail: impl Into<String>) -> Self {
        Error::Assumption { assumption, detail: detail.into() }
    }
}
