use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("fixed-point iteration did not converge after {iterations} iterations (trajectory: {trajectory:?})")]
    NonConvergence {
        iterations: usize,
        trajectory: Vec<(f64, f64, i64)>,
    },

    #[error("integer overflow: {0}")]
    Overflow(String),

    #[error("interval set is empty")]
    EmptyIntervals,

    #[error("non-finite utility {0}")]
    NonFiniteUtility(f64),

    #[error("instance too large for exact enumeration: {0}")]
    TooLarge(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Error {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Process exit status: 1 usage, 2 data, 3 convergence or degenerate parameters.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Context { source, .. } => source.exit_code(),
            Error::InvalidParameter(_) => 1,
            Error::Data(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_)
            | Error::Overflow(_)
            | Error::TooLarge(_) => 2,
            Error::Degenerate(_)
            | Error::NonConvergence { .. }
            | Error::EmptyIntervals
            | Error::NonFiniteUtility(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
