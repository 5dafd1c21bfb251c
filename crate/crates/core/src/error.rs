use thiserror::Error;

/// Every fallible operation in the crate returns this error.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("bisection bracket has no sign change: f(lo)={flo}, f(hi)={fhi}")]
    NoSignChange { flo: f64, fhi: f64 },
    #[error("{solver} did not converge within {iterations} iterations")]
    MaxIterExceeded {
        solver: &'static str,
        iterations: usize,
        last: Vec<f64>,
    },
    #[error("{solver} did not converge within {cycles} cycles")]
    MaxCyclesExceeded {
        solver: &'static str,
        cycles: usize,
        last: Vec<f64>,
    },
    #[error("argument out of domain: {0}")]
    OutOfDomain(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("lambda must be non-negative, got {0}")]
    NegativeLambda(f64),
    #[error("lower bound exceeds upper bound at index {0}")]
    InvertedBounds(usize),
    #[error("degenerate set: {0}")]
    DegenerateSet(&'static str),
    #[error("unsupported norm p={0}")]
    UnsupportedNorm(String),
    #[error("weights must be strictly positive")]
    NonPositiveWeight,
    #[error("transaction costs must be non-negative")]
    NegativeCost,
    #[error("k={k} must lie in 1..={n}")]
    BadK { k: usize, n: usize },
    #[error("scale factor must be non-zero")]
    ZeroScale,
    #[error("intersection looks empty (residual norm {0:e})")]
    EmptySetSuspected(f64),
    #[error("column {0} of the design matrix is zero")]
    ZeroColumn(usize),
    #[error("diagonal entry {0} is not positive")]
    NonPositiveDiagonal(usize),
    #[error("starting point must be strictly positive")]
    NonPositiveStart,
    #[error("variance of asset {0} is not positive")]
    NonPositiveVariance(usize),
    #[error("problem looks infeasible: {0}")]
    InfeasibleSuspected(String),
    #[error("target {0} cannot be reached")]
    TargetUnreachable(String),
    #[error("diversification level {0} cannot be reached")]
    UnreachableDiversification(f64),
    #[error("return/volatility targets are infeasible")]
    InfeasibleTargets,
    #[error("indefinite quadratic form could not be regularised")]
    IndefiniteUnhandled,
    #[error("formulations disagree by {0:e}")]
    FormulationDisagreement(f64),
    #[error("bad dimensions: {0}")]
    BadDims(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_len(what: &str, got: usize, want: usize) -> Result<()> {
    if got != want {
        return Err(Error::DimensionMismatch(format!(
            "{what}: length {got}, expected {want}"
        )));
    }
    Ok(())
}
