use alloc::string::String;

use thiserror::Error;

/// Errors raised by the transport routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Inputs violate the mathematical preconditions of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two objects that must agree in size do not.
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    /// A column of the Gibbs kernel vanished in floating point.
    #[error(
        "Gibbs kernel underflow at lambda = {lambda}: column {column} has lambda * min cost = {exponent:.3e}; \
         use a smaller lambda or normalize the cost matrix"
    )]
    KernelUnderflow { lambda: f64, column: usize, exponent: f64 },

    /// The scaling iterate left the finite range.
    #[error("non-finite Sinkhorn iterate at lambda = {lambda}, iteration {iteration}")]
    NonFinite { lambda: f64, iteration: usize },

    /// The cost matrix is not a Euclidean distance matrix.
    #[error("cost matrix is not an EDM: centered Gram matrix has eigenvalue {min_eigenvalue:.3e}")]
    NotEuclidean { min_eigenvalue: f64 },

    /// The exact solver exceeded its pivot budget.
    #[error("network simplex did not terminate after {pivots} pivots (most negative reduced cost {reduced_cost:.3e})")]
    PivotLimit { pivots: usize, reduced_cost: f64 },

    /// The entropy bisection could not bracket its target.
    #[error("entropy target {target:.6} not reached at lambda ceiling {lambda:.3e} (entropy {entropy:.6})")]
    Unbracketed { target: f64, lambda: f64, entropy: f64 },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn ensure_dim(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
