use thiserror::Error;

/// Errors produced by the analysis routines.
///
/// Every variant maps to a stable machine-readable code via [`Error::code`],
/// which is what the command-line frontend reports.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not symmetric (residual {residual:e})")]
    NotSymmetric { residual: f64 },
    #[error("map is not expansive (smallest eigenvalue modulus {min_modulus})")]
    NotExpansive { min_modulus: f64 },
    #[error("map is not positive (smallest eigenvalue {min_eigenvalue})")]
    NotPositive { min_eigenvalue: f64 },
    #[error("matrix is singular")]
    SingularMatrix,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("window acceptance rate {acceptance:e} is below the 0.1% floor")]
    DegenerateWindow { acceptance: f64 },
    #[error("axis subspace is not invariant (residual {residual:e})")]
    NotInvariant { residual: f64 },
    #[error("integer matrix is not expanding")]
    NotExpanding,
    #[error("determinant {0} is not +-2")]
    WrongDeterminant(i64),
    #[error("determinant must be negative")]
    WrongSign,
    #[error("no root-of-identity table row for l = {0}")]
    BadRow(u32),
    #[error("matrix is not unimodular")]
    NotUnimodular,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::NotSymmetric { .. } => "NotSymmetric",
            Error::NotExpansive { .. } => "NotExpansive",
            Error::NotPositive { .. } => "NotPositive",
            Error::SingularMatrix => "SingularMatrix",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::BadParameter(_) => "BadParameter",
            Error::DegenerateWindow { .. } => "DegenerateWindow",
            Error::NotInvariant { .. } => "NotInvariant",
            Error::NotExpanding => "NotExpanding",
            Error::WrongDeterminant(_) => "WrongDeterminant",
            Error::WrongSign => "WrongSign",
            Error::BadRow(_) => "BadRow",
            Error::NotUnimodular => "NotUnimodular",
            Error::PreconditionViolated(_) => "PreconditionViolated",
            Error::Parse(_) => "ParseError",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
