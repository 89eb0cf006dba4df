//! Crate-wide error type.

use thiserror::Error;

/// Errors reported by the modeling, sketching and certification layers.
///
/// Solver-side outcomes (infeasible, unbounded, iteration limit, ...) are not
/// errors; they are carried by [`crate::solver::SolveStatus`].
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A matrix or vector contains NaN or infinite entries.
    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    /// Operand shapes are incompatible.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// The symmetric eigensolver exceeded its sweep budget.
    #[error("eigendecomposition did not converge within {0} sweeps")]
    ConvergenceFailure(usize),

    /// A sketch configuration violates its invariants.
    #[error("invalid sketch configuration: {0}")]
    InvalidConfig(String),

    /// A requested sketch shape is impossible.
    #[error("invalid sketch shape: {0}")]
    InvalidShape(String),

    /// The problem is not a packing problem (some B_i not PSD or some rhs not positive).
    #[error("not a packing problem: {0}")]
    NotPacking(String),

    /// A claimed Slater point fails strict feasibility.
    #[error("point is not strictly feasible: {0}")]
    NotStrictlyFeasible(String),

    /// A separator certificate has a zero trace norm where a ratio is required.
    #[error("degenerate separator certificate: {0}")]
    DegenerateCertificate(String),

    /// A solver step failed in a way that invalidates downstream use.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    /// Input data failed structural validation.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// JSON (de)serialization failed.
    #[error("serialization error: {0}")]
    Serialization(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
