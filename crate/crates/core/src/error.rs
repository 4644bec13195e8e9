use thiserror::Error;

pub type Result<T> = std::result::Result<T, DilationError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DilationError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix contains a non-finite entry")]
    NonFinite,

    #[error("subspace is not contained in the ambient span (residual {residual:.3e})")]
    ContainmentViolation { residual: f64 },

    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e})")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix is not positive semidefinite (eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("pencil is not contractive on the unit circle (max norm {max_norm:.6})")]
    NotContractive { max_norm: f64 },

    #[error("pencil is not isometric (residual {residual:.3e})")]
    NotIsometric { residual: f64 },

    #[error(
        "spectral factorization did not converge after {iterations} iterations \
         (last step {residual:.3e}); try raising the iteration cap"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("factor is not outer: a zero of det F(z) lies at |z| = {modulus:.6}")]
    NotOuter { modulus: f64 },

    #[error("factor does not match the pencil (residual {residual:.3e})")]
    FactorMismatch { residual: f64 },

    #[error("word length {len} exceeds the cap {cap}")]
    CapExceeded { len: usize, cap: usize },

    #[error("not a dilation of the given pencil: {0}")]
    NotADilation(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}
