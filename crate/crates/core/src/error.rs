use thiserror::Error;

use crate::multimode::ModeIndex;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The quadratic form `a x² + b y² − 2c xy` is not positive definite.
    #[error("degenerate parameters (a={a}, b={b}, c={c}): ab - c^2 must be positive")]
    DegenerateParams { a: f64, b: f64, c: f64 },

    #[error("singular covariance matrix (det = {det})")]
    SingularCm { det: f64 },

    #[error("invariant violated: {0}")]
    InvariantViolation(String),

    #[error("modes {plus} and {minus} are not an opposite (Ω, -Ω) pair")]
    ModeMismatch { plus: ModeIndex, minus: ModeIndex },

    #[error("covariance matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("block tagged {found} where {expected} is required")]
    WrongBasis { expected: &'static str, found: &'static str },

    #[error(
        "modes ({0}, {1}) form a correlated ±Ω pair; the product purity law does not apply, \
         measure the pair in the X/Y basis instead"
    )]
    CorrelatedPairNotSupported(ModeIndex, ModeIndex),

    #[error("invalid spectrum configuration: {0}")]
    ConfigInvalid(String),

    #[error("bin {0} is not present in the ensemble")]
    BinAbsent(ModeIndex),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("tensor grid needs {needed} points, budget is {budget}; use Monte Carlo")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("unsupported document kind: {0}")]
    UnsupportedKind(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }
}
