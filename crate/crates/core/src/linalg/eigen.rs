use alloc::vec::Vec;

use super::DenseMatrix;

const MAX_SWEEPS: usize = 100;

/// Eigendecomposition `A = V diag(values) V^T` of a real symmetric matrix.
///
/// Eigenvalues are sorted ascending; column `i` of `vectors` belongs to
/// `values[i]`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl SymmetricEigen {
    /// Cyclic Jacobi rotations. Only the symmetric part of `a` is used.
    pub fn new(a: &DenseMatrix) -> Self {
        assert!(a.is_square(), "symmetric eigen: matrix must be square");
        let n = a.rows();
        let mut w = a.symmetric_part();
        let mut v = DenseMatrix::identity(n);
        let scale = w.frobenius_norm();

        for _ in 0..MAX_SWEEPS {
            let off: f64 = (0..n)
                .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                .map(|(i, j)| w[(i, j)] * w[(i, j)])
                .sum();
            if off == 0.0 || libm::sqrt(off) <= f64::EPSILON * 1e-2 * scale {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    let apq = w[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let app = w[(p, p)];
                    let aqq = w[(q, q)];
                    // Skip rotations that no longer change the diagonal.
                    if apq.abs() * 1e18 < app.abs().min(aqq.abs()) {
                        w[(p, q)] = 0.0;
                        w[(q, p)] = 0.0;
                        continue;
                    }
                    let theta = (aqq - app) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + libm::sqrt(theta * theta + 1.0));
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / libm::sqrt(t * t + 1.0);
                    let s = t * c;

                    for k in 0..n {
                        let wkp = w[(k, p)];
                        let wkq = w[(k, q)];
                        w[(k, p)] = c * wkp - s * wkq;
                        w[(k, q)] = s * wkp + c * wkq;
                    }
                    for k in 0..n {
                        let wpk = w[(p, k)];
                        let wqk = w[(q, k)];
                        w[(p, k)] = c * wpk - s * wqk;
                        w[(q, k)] = s * wpk + c * wqk;
                    }
                    w[(p, q)] = 0.0;
                    w[(q, p)] = 0.0;
                    for k in 0..n {
                        let vkp = v[(k, p)];
                        let vkq = v[(k, q)];
                        v[(k, p)] = c * vkp - s * vkq;
                        v[(k, q)] = s * vkp + c * vkq;
                    }
                }
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| w[(i, i)].total_cmp(&w[(j, j)]));
        let values = order.iter().map(|&i| w[(i, i)]).collect();
        let vectors = DenseMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
        Self { values, vectors }
    }

    /// `V diag(f(values)) V^T`.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> DenseMatrix {
        let d: Vec<f64> = self.values.iter().map(|&x| f(x)).collect();
        self.vectors
            .scale_cols(&d)
            .matmul(&self.vectors.transpose())
    }

    pub fn max_abs_value(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}
