use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by laws, models, estimators and design tools.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("unsupported query: {0}")]
    Unsupported(&'static str),

    /// The pairing of a cost model and a truncation law has infinite expected cost.
    #[error("divergent expected cost: {0}")]
    DivergentCost(String),

    /// A level sequence model failed while producing `level`.
    #[error("level {level}: {reason}")]
    Level { level: usize, reason: String },

    /// An adaptive replicate reached its level guard without stopping.
    #[error("adaptive guard exhausted at level {0}")]
    GuardExhausted(usize),

    #[error("infeasible law: {0}")]
    InfeasibleLaw(String),

    #[error("infeasible budget: {0}")]
    InfeasibleBudget(String),

    #[error("degenerate design: {0}")]
    DegenerateDesign(String),

    #[error("invalid state: {0}")]
    InvalidState(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn level(level: usize, reason: impl Into<String>) -> Self {
        Error::Level {
            level,
            reason: reason.into(),
        }
    }
}
