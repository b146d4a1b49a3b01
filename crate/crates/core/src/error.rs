use thiserror::Error;

pub type Result<T> = std::result::Result<T, QifsError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QifsError {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("arity mismatch: expected {expected} operators, found {found}")]
    ArityMismatch { expected: usize, found: usize },

    #[error("empty operator family")]
    EmptyFamily,

    #[error("not a density matrix: {0}")]
    InvalidState(String),

    #[error("family is not normalized: max |sum K*K - I| = {deviation:e}")]
    NotNormalized { deviation: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("branch {branch} is degenerate (tr(V rho V*) = {trace:e}) but carries weight {weight:e}")]
    DegenerateBranch { branch: usize, trace: f64, weight: f64 },

    #[error("word enumeration needs {words} words, above the cap of {cap}")]
    CapExceeded { words: u128, cap: u64 },

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("image of the seed has trace {trace:e}; the potential is degenerate")]
    ZeroImage { trace: f64 },

    #[error("stochastic matrix is reducible")]
    Reducible,

    #[error("state is not a fixed point of the nonlinear channel (residual {residual:e})")]
    NotFixedPoint { residual: f64 },

    #[error("potential term for branch {branch} has nonpositive trace product")]
    DegeneratePotential { branch: usize },

    #[error("coordinate ({l}, {m}) is unusable: {reason}")]
    CoordinateDegenerate { l: usize, m: usize, reason: String },

    #[error("precondition unmet: {0}")]
    PreconditionUnmet(String),

    #[error("embedding needs strictly positive entries: {0}")]
    EmbeddingDegenerate(String),

    #[error("no candidate satisfies the cost constraint")]
    Infeasible,
}

impl QifsError {
    /// Errors caused by malformed inputs rather than by a numerical procedure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            QifsError::NotSquare { .. }
                | QifsError::DimensionMismatch { .. }
                | QifsError::ArityMismatch { .. }
                | QifsError::EmptyFamily
                | QifsError::InvalidState(_)
                | QifsError::NotNormalized { .. }
                | QifsError::InvalidArgument(_)
                | QifsError::EmbeddingDegenerate(_)
                | QifsError::Reducible
        )
    }

    pub fn is_non_convergence(&self) -> bool {
        matches!(self, QifsError::NonConvergence { .. })
    }
}
