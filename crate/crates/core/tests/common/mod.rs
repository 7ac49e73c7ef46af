//! Independent oracles shared by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use optpredict_core::linalg::{spd_sqrt, SymmetricEigen};
use optpredict_core::prediction::LinearSystem;
use optpredict_core::DenseMatrix;

/// Gaussian elimination with partial pivoting on a copy (test-only).
pub fn gauss_solve(a: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut row: Vec<f64> = a.row(i).to_vec();
            row.push(b[i]);
            row
        })
        .collect();
    for k in 0..n {
        let p = (k..n)
            .max_by(|&i, &j| m[i][k].abs().total_cmp(&m[j][k].abs()))
            .unwrap();
        m.swap(k, p);
        for i in k + 1..n {
            let f = m[i][k] / m[k][k];
            for j in k..=n {
                m[i][j] -= f * m[k][j];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
        x[i] = (m[i][n] - s) / m[i][i];
    }
    x
}

pub fn gauss_inverse(a: &DenseMatrix) -> DenseMatrix {
    let n = a.rows();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            gauss_solve(a, &e)
        })
        .collect();
    DenseMatrix::from_columns(&cols)
}

/// Constraint matrix whose columns span a left-invariant subspace of `L`
/// (`L^T G = G B`). Built from the top eigenpair block of `-C^2` where
/// `C = A^{1/2} K A^{1/2}` is skew.
pub fn invariant_constraints(sys: &LinearSystem) -> DenseMatrix {
    let r = sys.a_sqrt().as_dense();
    let c = r.matmul(sys.k()).matmul(r);
    let c = c.sub(&c.transpose()).scale(0.5);
    let neg_c2 = c.tr_matmul(&c);
    let eig = SymmetricEigen::new(&neg_c2);
    let m = sys.dim();
    let v = DenseMatrix::from_columns(&[eig.vectors.column(m - 1), eig.vectors.column(m - 2)]);
    r.matmul(&v)
}

fn poly_eval(coeffs: &[f64], z: (f64, f64)) -> (f64, f64) {
    // coeffs[0] z^n + ... + coeffs[n]
    coeffs.iter().fold((0.0, 0.0), |(re, im), &c| {
        (re * z.0 - im * z.1 + c, re * z.1 + im * z.0)
    })
}

fn cdiv(a: (f64, f64), b: (f64, f64)) -> (f64, f64) {
    let d = b.0 * b.0 + b.1 * b.1;
    ((a.0 * b.0 + a.1 * b.1) / d, (a.1 * b.0 - a.0 * b.1) / d)
}

/// Eigenvalues of a small matrix: Faddeev-LeVerrier characteristic
/// polynomial, then Durand-Kerner root iteration in complex arithmetic.
pub fn eigenvalues_small(a: &DenseMatrix) -> Vec<(f64, f64)> {
    let n = a.rows();
    let mut coeffs = vec![1.0];
    let mut mk = DenseMatrix::zeros(n, n);
    for k in 1..=n {
        let ident = DenseMatrix::identity(n).scale(*coeffs.last().unwrap());
        mk = a.matmul(&mk).add(&ident);
        let amk = a.matmul(&mk);
        coeffs.push(-amk.trace() / k as f64);
    }
    let mut roots: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let ang = 0.4 + 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            (0.9 * ang.cos(), 0.9 * ang.sin())
        })
        .collect();
    let scale = a.max_abs() * n as f64 + 1.0;
    for r in roots.iter_mut() {
        r.0 *= scale;
        r.1 *= scale;
    }
    for _ in 0..2000 {
        for i in 0..n {
            let zi = roots[i];
            let mut denom = (1.0, 0.0);
            for (j, zj) in roots.iter().enumerate() {
                if j != i {
                    let d = (zi.0 - zj.0, zi.1 - zj.1);
                    denom = (denom.0 * d.0 - denom.1 * d.1, denom.0 * d.1 + denom.1 * d.0);
                }
            }
            let step = cdiv(poly_eval(&coeffs, zi), denom);
            roots[i] = (zi.0 - step.0, zi.1 - step.1);
        }
    }
    roots
}

/// `A^{-1/2}`, only for building test inputs.
pub fn inv_sqrt(a: &DenseMatrix) -> DenseMatrix {
    let s = optpredict_core::SpdMatrix::new(a.clone()).unwrap();
    spd_sqrt(&s).unwrap().1.into_dense()
}
