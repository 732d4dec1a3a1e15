use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// A user-supplied parameter is outside its documented range.
    #[error("invalid `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("{which} rate at state {state} evaluated to {value}")]
    RateEvaluation {
        which: &'static str,
        state: i64,
        value: f64,
    },

    /// Exact rates disagree with the declared asymptotic parameters.
    #[error(
        "{which} rate is inconsistent with its declared asymptotics at x = {state}: \
         relative deviation {deviation:.3e} exceeds {tolerance:.3e}"
    )]
    AsymptoticMismatch {
        which: &'static str,
        state: f64,
        deviation: f64,
        tolerance: f64,
    },

    #[error("degenerate regime (l = m and P_l = Q_m): no rate functional at speed T^(l+1)")]
    DegenerateRegime,

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("oracle budget exceeded: {needed:.3e} work units requested, budget is {budget:.3e}")]
    OracleBudget { needed: f64, budget: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// Whether the failure is a validation failure (bad input) as opposed to
    /// a runtime failure.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Io(_) | Error::OracleBudget { .. })
    }

    /// The offending input field, when the error names one.
    pub fn field(&self) -> Option<&str> {
        match self {
            Error::InvalidParameter { field, .. } => Some(field),
            Error::AsymptoticMismatch { which, .. } => Some(which),
            Error::InvalidProfile(_) => Some("profile"),
            Error::DegenerateRegime => Some("model"),
            _ => None,
        }
    }
}
