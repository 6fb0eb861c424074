use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("recurrence coefficient a_{index} = {value} is not positive")]
    NonPositiveCoefficient { index: usize, value: f64 },

    #[error("recurrence coefficient at index {index} is not finite")]
    NonFiniteCoefficient { index: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A pivot of the signed factorization vanished. `shift` is the index of
    /// the shift in a chained transform (0 for a single shift).
    #[error("factorization breakdown at pivot {pivot} (shift #{shift})")]
    Breakdown { shift: usize, pivot: usize },

    #[error("eigenvalue iteration did not converge ({context})")]
    IterationLimit { context: String },

    #[error("reconstructed off-diagonal entry {index} is not positive: not a Jacobi matrix")]
    NotJacobi { index: usize },

    #[error("sub/super-diagonal product vanishes at {index}: no signature exists")]
    NotSignSymmetric { index: usize },

    #[error("Hankel system of order {order} is numerically singular")]
    SingularHankel { order: usize },

    #[error("branch of sqrt(lambda^2 - 1) is ambiguous at lambda = {re}{im:+}i")]
    BranchAmbiguity { re: f64, im: f64 },

    #[error("closed-form evaluation needs the Chebyshev base measure, got `{0}`")]
    UnsupportedMeasure(String),
}

impl Error {
    pub fn is_breakdown(&self) -> bool {
        matches!(self, Error::Breakdown { .. })
    }

    pub(crate) fn with_shift(self, shift: usize) -> Self {
        match self {
            Error::Breakdown { pivot, .. } => Error::Breakdown { shift, pivot },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
