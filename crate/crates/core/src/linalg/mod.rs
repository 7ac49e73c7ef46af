//! Dense real linear algebra for the prediction formulas.
//!
//! Everything here works on small matrices (order a few hundred at most) and
//! favours accuracy over speed: symmetric eigenproblems and singular values
//! use Jacobi rotations, and all matrix norms are operator 2-norms.

mod cholesky;
mod eigen;
mod expm;
mod lu;
mod matrix;
mod quadrature;
mod svd;

use alloc::vec::Vec;

pub use cholesky::Cholesky;
pub use eigen::SymmetricEigen;
pub use matrix::{axpy, dot, norm2, sub_vec, DenseMatrix, SpdMatrix};
pub use quadrature::{integrate_matrix_curve, MAX_PANELS};
pub use svd::singular_values;

use crate::error::{Error, Result};

/// Numerical tolerances used by the kernel. `Default` gives the documented
/// values; callers may tighten or loosen them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Eigenvalues below `spd_eigen * |A|_2` make a matrix "not positive definite".
    pub spd_eigen: f64,
    /// Relative threshold on `sigma_min / sigma_max` for full column rank.
    pub rank: f64,
    /// Relative bound on `|L^T A + A L|_2 / (|A|_2 |L|_2)`.
    pub invariance: f64,
    /// Relative bound on the skew residual of `G^T K G`.
    pub skew: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            spd_eigen: 1e-12,
            rank: 1e-10,
            invariance: 1e-10,
            skew: 1e-12,
        }
    }
}

/// Solves `a X = b` through a Cholesky factorization.
pub fn spd_solve(a: &SpdMatrix, b: &DenseMatrix) -> Result<DenseMatrix> {
    if a.dim() != b.rows() {
        return Err(Error::DimensionMismatch {
            op: "spd_solve",
            expected: a.dim(),
            found: b.rows(),
        });
    }
    Ok(Cholesky::new(a)?.solve(b))
}

/// Symmetric square root and inverse square root, `(A^{1/2}, A^{-1/2})`.
pub fn spd_sqrt(a: &SpdMatrix) -> Result<(SpdMatrix, SpdMatrix)> {
    spd_sqrt_with(a, Tolerances::default().spd_eigen)
}

pub fn spd_sqrt_with(a: &SpdMatrix, rel_tol: f64) -> Result<(SpdMatrix, SpdMatrix)> {
    let eig = SymmetricEigen::new(a.as_dense());
    let limit = rel_tol * eig.max_abs_value();
    if let Some(&bad) = eig.values.iter().find(|&&l| l <= limit) {
        return Err(Error::NotPositiveDefinite { value: bad });
    }
    let root = SpdMatrix::new(eig.map_values(libm::sqrt))?;
    let inv_root = SpdMatrix::new(eig.map_values(|l| 1.0 / libm::sqrt(l)))?;
    Ok((root, inv_root))
}

/// `exp(t L)`.
pub fn expm(l: &DenseMatrix, t: f64) -> Result<DenseMatrix> {
    if !l.is_square() {
        return Err(Error::NotSquare {
            rows: l.rows(),
            cols: l.cols(),
        });
    }
    if !t.is_finite() {
        return Err(Error::NonFinite("expm time"));
    }
    if t == 0.0 {
        return Ok(DenseMatrix::identity(l.rows()));
    }
    let scaled = l.scale(t);
    if !scaled.is_finite() {
        return Err(Error::NonFinite("expm argument"));
    }
    Ok(expm::expm_pade13(&scaled))
}

/// Largest singular value (operator 2-norm).
pub fn spectral_norm(b: &DenseMatrix) -> f64 {
    if b.rows() == 0 || b.cols() == 0 {
        return 0.0;
    }
    singular_values(b)[0]
}

/// Smallest over largest singular value; zero for a zero matrix.
pub fn inverse_condition(b: &DenseMatrix) -> f64 {
    let sv: Vec<f64> = singular_values(b);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    }
}
