use alloc::string::String;

use crate::ode::OdeError;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid spin multiplicity {0}: must be at least 1")]
    InvalidSpin(usize),

    #[error("layout error: {0}")]
    Layout(String),

    #[error("sites {0} and {1} are not a pair of spin-1/2 electrons")]
    InvalidPair(usize, usize),

    #[error("invalid `{field}`: {reason}")]
    Spec { field: String, reason: String },

    #[error(transparent)]
    Ode(#[from] OdeError),

    #[error("trajectory {index}: {source}")]
    Trajectory {
        index: u64,
        #[source]
        source: OdeError,
    },

    #[error("no jump channel open (total weight {total_weight:e}, squared norm {norm_sqr:e})")]
    DegenerateJump { total_weight: f64, norm_sqr: f64 },

    #[error("exhaustive enumeration exhausted: index {index} >= {count} nuclear states")]
    EnumerationExhausted { index: u64, count: usize },

    #[error("range error: {0}")]
    Range(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("configuration error: {0}")]
    Configuration(String),
}

impl Error {
    pub(crate) fn spec(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Spec {
            field: field.into(),
            reason: reason.into(),
        }
    }
}
