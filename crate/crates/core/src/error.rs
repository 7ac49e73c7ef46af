use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite (pivot or eigenvalue {value:e})")]
    NotPositiveDefinite { value: f64 },

    #[error("dimension mismatch in {op}: expected {expected}, got {found}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("quadrature tolerance not met after {panels} panels (estimate {estimate:e})")]
    ToleranceNotMet { panels: usize, estimate: f64 },

    #[error("invariance residual |L^T A + A L| = {residual:e} exceeds {limit:e}")]
    InvarianceViolated { residual: f64, limit: f64 },

    #[error("constraint matrix is rank deficient (sigma_min/sigma_max = {ratio:e})")]
    RankDeficient { ratio: f64 },

    #[error("constraint matrix has {cols} columns but the state has dimension {rows}")]
    TooManyConstraints { rows: usize, cols: usize },

    #[error("constraint Gram matrix M is singular")]
    SingularM,

    #[error("matrix expected to be skew-symmetric has residual {residual:e}")]
    NotSkew { residual: f64 },

    #[error("q and p constraint blocks differ")]
    BlocksDiffer,

    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(&'static str),

    #[error("cannot embed from r = {from} into smaller r = {to}")]
    ShrinkNotAllowed { from: usize, to: usize },
}
