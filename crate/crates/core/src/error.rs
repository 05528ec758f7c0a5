use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0}")]
    Data(String),

    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },

    #[error("value {value} lies outside the domain [{lower}, {upper}]")]
    OutOfDomain { value: f64, lower: f64, upper: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("log-likelihood is not finite at the supplied parameters")]
    InfeasibleStart,

    #[error("no feasible ascent step from the initial point: {0}")]
    NoFeasibleAscent(String),

    #[error("true-positive fraction undefined at t = {0}: no event mass before the horizon")]
    UndefinedTp(f64),

    #[error("false-positive fraction undefined at t = {0}: all event mass before the horizon")]
    UndefinedFp(f64),

    #[error("{failed} of {total} bootstrap replicates failed (first failure: {first})")]
    TooManyFailures {
        failed: usize,
        total: usize,
        first: String,
    },

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Coarse classification used for process exit codes.
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::InvalidArgument(_) => ErrorKind::Usage,
            Error::InfeasibleStart | Error::NoFeasibleAscent(_) | Error::TooManyFailures { .. } => {
                ErrorKind::Convergence
            }
            _ => ErrorKind::Data,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Convergence,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
