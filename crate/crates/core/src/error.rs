use thiserror::Error;

/// Failures raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("decomposition did not converge: {0}")]
    Convergence(&'static str),

    #[error("invalid tolerances: {0}")]
    InvalidTolerance(String),

    #[error("weight is not Hermitian (relative asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("weight is not positive semidefinite (minimum eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("not a projection: {0}")]
    NotProjection(String),

    #[error("subspaces do not form a direct sum decomposition of the ambient space")]
    DirectSum,

    #[error("subspace is not contained in the enclosing subspace (residual {0:.3e})")]
    NotContained(f64),

    #[error("range inclusion fails, equation has no solution (relative residual {residual:.3e})")]
    NoSolution { residual: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerically incompatible weight and subspace: {0}")]
    Incompatible(String),

    #[error("constraint is infeasible (relative residual {residual:.3e})")]
    Infeasible { residual: f64 },
}

impl Error {
    /// True for failures caused by finite precision rather than by the
    /// mathematical data.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Convergence(_) | Error::Incompatible(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
