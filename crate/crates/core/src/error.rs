use thiserror::Error;

/// Errors produced by the laboratory.
///
/// Every variant maps onto one CLI exit class, see [`Error::exit_code`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("gram matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("basis vectors are parallel")]
    DegenerateBasis,

    #[error("budget exceeded: {what} needs {required} bytes but the budget is {budget} bytes")]
    Budget {
        what: String,
        required: u128,
        budget: u128,
    },

    #[error("oracle size cap exceeded: {n} points > cap {cap}; subsample the input first")]
    OracleCap { n: usize, cap: usize },

    #[error("integer overflow in {0}")]
    Overflow(&'static str),

    #[error("iteration did not converge: {0}")]
    NonConvergence(String),

    #[error("check failed: {0}")]
    CheckFailed(String),

    #[error("performance regression: {0}")]
    Regression(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }

    pub fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }

    /// Short machine-readable class name, used in one-line CLI diagnostics.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Parse(_) => "parse",
            Error::Precondition(_) | Error::NotPositiveDefinite | Error::DegenerateBasis => {
                "precondition"
            }
            Error::Budget { .. } => "budget",
            Error::OracleCap { .. } => "oracle-cap",
            Error::Overflow(_) => "overflow",
            Error::NonConvergence(_) => "non-convergence",
            Error::CheckFailed(_) => "check-failed",
            Error::Regression(_) => "regression",
            Error::Io(_) => "io",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) => 2,
            Error::Precondition(_) | Error::NotPositiveDefinite | Error::DegenerateBasis => 3,
            Error::Budget { .. } => 4,
            Error::OracleCap { .. } => 5,
            Error::Overflow(_) => 6,
            Error::NonConvergence(_) => 7,
            Error::Io(_) => 8,
            Error::CheckFailed(_) => 9,
            Error::Regression(_) => 10,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Error::Io(std::io::Error::other(e.to_string()))
        } else {
            Error::Parse(e.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
