use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("simulation exceeded the event cap of {cap} events")]
    EventCapExceeded { cap: u64 },

    #[error("no trajectory with at least {n} survivors after {attempts} attempts")]
    RejectionBudgetExceeded { n: usize, attempts: u64 },

    #[error("branches {first} and {second} have identical heights")]
    HeightTie { first: usize, second: usize },

    #[error("input vector contains duplicate values")]
    DuplicateValues,

    #[error("asymptotic regime condition violated: {0}")]
    ConditionViolated(String),

    #[error("quadrature did not converge: estimate {estimate}, error bound {abs_err:e}")]
    QuadratureNotConverged { estimate: f64, abs_err: f64 },

    #[error("experiment needs at least {needed} replicates, got {got}")]
    EmptyExperiment { needed: usize, got: usize },

    #[error("mode `{0}` is not supported by this experiment")]
    UnsupportedMode(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
