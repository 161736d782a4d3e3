use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("operator dimension must be at least 1")]
    EmptyOperator,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operator is not Hermitian: entries ({row},{col}) and ({col},{row}) differ by {deviation:e}")]
    NotHermitian { row: usize, col: usize, deviation: f64 },

    #[error("operator has non-finite entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },

    #[error("density operator trace is {trace}, expected 1")]
    BadTrace { trace: f64 },

    #[error("density operator has negative eigenvalue {value:e}")]
    NotPositive { value: f64 },

    #[error(
        "inconsistent null-space: eigenvalue pair ({i},{j}) of the coefficient operator sums to \
         {lambda_sum:e} while the right-hand side entry has modulus {rhs:e}"
    )]
    InconsistentNullSpace { i: usize, j: usize, lambda_sum: f64, rhs: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("value {value} lies outside the domain {domain}")]
    Domain { value: f64, domain: String },

    #[error("eigenvalue {label} is outside the range of the f-map {range}")]
    EstimatorRange { label: f64, range: String },

    #[error("integrand is not finite at node theta = {theta}")]
    Integration { theta: f64 },

    #[error("prior normalization is {total}, expected 1")]
    Normalization { total: f64 },

    #[error("POM is invalid: {0}")]
    InvalidPom(String),

    #[error("outcome {outcome} has zero probability {probability:e} but carries first moment {moment:e}")]
    ZeroProbabilityOutcome { outcome: usize, probability: f64, moment: f64 },

    #[error("observed outcome is impossible under every hypothesis on the grid")]
    ImpossibleOutcome,

    #[error("root finding failed to bracket {target}")]
    RootFinding { target: f64 },

    #[error("no candidate control could be solved: {0}")]
    NoViableCandidate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
