use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("sector mismatch: {0}")]
    SectorMismatch(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator does not commute with slot permutations (commutator norm {norm:.3e})")]
    NotPermutationSymmetric { norm: f64 },

    #[error("operator is not metric-Hermitian (residual {residual:.3e})")]
    NotPseudoHermitian { residual: f64 },

    #[error("realization mismatch: {0}")]
    RealizationMismatch(String),

    #[error("{what} exceeds the supported size (limit {limit})")]
    TooLarge { what: String, limit: usize },

    #[error("sector {requested} exceeds the truncation n_max = {n_max}")]
    Truncation { requested: usize, n_max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("numerical guard tripped: {0}")]
    NumericalGuard(String),

    #[error("no convergence after {iterations} iterations (last residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64, history: Vec<f64> },
}

impl Error {
    /// Guards on step size, tail weight and convergence are numerical failures;
    /// everything else is a malformed request.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NumericalGuard(_) | Error::NoConvergence { .. })
    }
}
