use thiserror::Error;

/// Errors raised by the risk, influence, bound and training routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RiskError {
    #[error("argument {t} is outside the validity domain [{lower}, +inf) of {spec}")]
    Domain { spec: String, t: f64, lower: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("cannot parse disutility `{input}`: {reason}")]
    ParseSpec { input: String, reason: String },

    #[error("empty input")]
    Empty,

    #[error("loss {value} at index {index} is outside [0, {bound}]")]
    LossOutOfRange {
        index: usize,
        value: f64,
        bound: f64,
    },

    #[error("k = {k} is out of range 1..={n}")]
    KOutOfRange { k: usize, n: usize },

    #[error("continuity assumption violated: the CVaR influence formula needs a loss distribution with a continuous density")]
    ContinuityRequired,

    #[error("distribution summary is missing `{0}`")]
    MissingSummary(&'static str),

    #[error("bound input is missing `{0}`")]
    MissingBoundInput(&'static str),

    #[error("{0} is not supported for this disutility")]
    Unsupported(&'static str),

    #[error("training diverged at epoch {epoch}: objective is {value}")]
    Diverged { epoch: usize, value: f64 },
}

pub type Result<T> = std::result::Result<T, RiskError>;
