use thiserror::Error;

use crate::model::Group;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("noise_var must be positive (got {0})")]
    NonPositiveNoiseVar(f64),

    #[error("covariate_probs must sum to 1 (got {0})")]
    CovariateProbsSum(f64),

    #[error("invalid problem spec: {0}")]
    InvalidSpec(String),

    #[error("invalid training config: {0}")]
    InvalidConfig(String),

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("unknown covariate index {0}")]
    UnknownCovariate(usize),

    #[error("no training observations at covariate index {x}")]
    EmptyCovariate { x: usize },

    #[error("group-aware prediction undefined for empty cell (x={x}, g={g})")]
    EmptyCell { x: usize, g: Group },

    #[error("signal outside prior support: posterior mass underflowed to zero")]
    SignalOutsideSupport,

    #[error("{0} requires a conjugate Normal prior")]
    ConjugateRequired(&'static str),

    #[error("closed forms require the balanced two-group single-covariate example: {0}")]
    NotBalancedExample(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("replication {index} failed: {source}")]
    Replication {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("requested at least {min} replications (got {got})")]
    TooFewReplications { min: usize, got: usize },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True when the error reports a violated claim precondition rather
    /// than a computational failure.
    pub fn is_precondition(&self) -> bool {
        match self {
            Error::Precondition(_) | Error::NotBalancedExample(_) | Error::ConjugateRequired(_) => {
                true
            }
            Error::Replication { source, .. } => source.is_precondition(),
            _ => false,
        }
    }
}
