//! Second-order systems `q'' = -A0^2 q` written in first-order block form.
//!
//! With `p = q'` the state is `u = (q, p)` and
//!
//! ```text
//! L = [[0, I], [-A0^2, 0]],   A = [[A0^2, 0], [0, I]],   G = [[Gq, 0], [0, Gp]],
//! ```
//!
//! so `u^T A u / 2` is the Hamiltonian `(p^T p + q^T A0^2 q) / 2`. When
//! `Gq = Gp = G` the reduced dynamics and the scaled defect have closed block
//! forms, implemented here next to the generic assembly.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{
    dot, inverse_condition, spd_sqrt, Cholesky, DenseMatrix, SpdMatrix, Tolerances,
};
use crate::prediction::{ConstraintSet, LinearSystem};

#[derive(Debug, Clone)]
pub struct HamiltonianBlocks {
    a0sq: SpdMatrix,
    gq: DenseMatrix,
    gp: DenseMatrix,
}

/// `G^T G`, `G^T A0^-2 G`, their square roots and `A0^{+-1}` for `Gq = Gp = G`.
struct EqualBlockParts {
    a0: DenseMatrix,
    a0_inv: DenseMatrix,
    gtg_sqrt: DenseMatrix,
    gtg_inv_sqrt: DenseMatrix,
    /// `(G^T A0^-2 G)^-1`
    gag_inv: DenseMatrix,
}

impl HamiltonianBlocks {
    pub fn new(a0sq: SpdMatrix, gq: DenseMatrix, gp: DenseMatrix) -> Result<Self> {
        let s = a0sq.dim();
        for g in [&gq, &gp] {
            if g.rows() != s {
                return Err(Error::DimensionMismatch {
                    op: "HamiltonianBlocks::new",
                    expected: s,
                    found: g.rows(),
                });
            }
            let ratio = inverse_condition(g);
            if !(ratio > Tolerances::default().rank) {
                return Err(Error::RankDeficient { ratio });
            }
        }
        if gq.cols() != gp.cols() {
            return Err(Error::DimensionMismatch {
                op: "HamiltonianBlocks::new (columns)",
                expected: gq.cols(),
                found: gp.cols(),
            });
        }
        Ok(Self { a0sq, gq, gp })
    }

    /// Same constraint matrix for positions and momenta.
    pub fn with_equal_blocks(a0sq: SpdMatrix, g: DenseMatrix) -> Result<Self> {
        Self::new(a0sq, g.clone(), g)
    }

    pub fn order(&self) -> usize {
        self.a0sq.dim()
    }

    pub fn a0sq(&self) -> &SpdMatrix {
        &self.a0sq
    }

    pub fn gq(&self) -> &DenseMatrix {
        &self.gq
    }

    pub fn gp(&self) -> &DenseMatrix {
        &self.gp
    }

    /// `(p^T p + q^T A0^2 q) / 2`.
    pub fn hamiltonian(&self, q: &[f64], p: &[f64]) -> f64 {
        0.5 * (dot(p, p) + self.a0sq.quadratic_form(q))
    }

    /// The `2s`-dimensional first-order system and its `2n` constraints.
    pub fn assemble(&self) -> Result<(LinearSystem, ConstraintSet)> {
        let s = self.order();
        let mut l = DenseMatrix::zeros(2 * s, 2 * s);
        l.set_block(0, s, &DenseMatrix::identity(s));
        l.set_block(s, 0, &self.a0sq.as_dense().scale(-1.0));
        let a = SpdMatrix::new(DenseMatrix::block_diag(
            self.a0sq.as_dense(),
            &DenseMatrix::identity(s),
        ))?;
        let sys = LinearSystem::new(l, a)?;
        let g = DenseMatrix::block_diag(&self.gq, &self.gp);
        let c = ConstraintSet::new(&sys, g)?;
        Ok((sys, c))
    }

    fn equal_block_parts(&self) -> Result<EqualBlockParts> {
        if self.gq != self.gp {
            return Err(Error::BlocksDiffer);
        }
        let g = &self.gq;
        let (a0, a0_inv) = spd_sqrt(&self.a0sq)?;
        let gtg = SpdMatrix::new(g.tr_matmul(g))?;
        let (gtg_sqrt, gtg_inv_sqrt) = spd_sqrt(&gtg)?;
        let a0sq_inv_g = Cholesky::new(&self.a0sq)?.solve(g);
        let gag = SpdMatrix::new(g.tr_matmul(&a0sq_inv_g))?;
        let gag_inv = Cholesky::new(&gag).map_err(|_| Error::SingularM)?.inverse();
        Ok(EqualBlockParts {
            a0: a0.into_dense(),
            a0_inv: a0_inv.into_dense(),
            gtg_sqrt: gtg_sqrt.into_dense(),
            gtg_inv_sqrt: gtg_inv_sqrt.into_dense(),
            gag_inv,
        })
    }

    /// Reduced generator `[[0, I], [-(G^T G)(G^T A0^-2 G)^-1, 0]]` (`2n x 2n`).
    pub fn reduced_system_matrix(&self) -> Result<DenseMatrix> {
        let parts = self.equal_block_parts()?;
        let n = self.gq.cols();
        let gtg = self.gq.tr_matmul(&self.gq);
        let mut out = DenseMatrix::zeros(2 * n, 2 * n);
        out.set_block(0, n, &DenseMatrix::identity(n));
        out.set_block(n, 0, &gtg.matmul(&parts.gag_inv).scale(-1.0));
        Ok(out)
    }

    /// `F = -A0 G (G^T G)^{-1/2} + A0^-1 G (G^T A0^-2 G)^-1 (G^T G)^{1/2}`.
    ///
    /// `A^{-1/2} E M^{-1/2}` of the assembled system is `[[0, F], [0, 0]]`,
    /// so `|F|_2` is the constant in the error bound.
    pub fn f_matrix(&self) -> Result<DenseMatrix> {
        let parts = self.equal_block_parts()?;
        let g = &self.gq;
        let first = parts.a0.matmul(g).matmul(&parts.gtg_inv_sqrt);
        let second = parts
            .a0_inv
            .matmul(g)
            .matmul(&parts.gag_inv)
            .matmul(&parts.gtg_sqrt);
        Ok(second.sub(&first))
    }

    /// `F^T F = (G^T G)^{-1/2} (G^T A0^2 G) (G^T G)^{-1/2}
    ///        - (G^T G)^{1/2} (G^T A0^-2 G)^-1 (G^T G)^{1/2}`.
    pub fn ftf_matrix(&self) -> Result<DenseMatrix> {
        let parts = self.equal_block_parts()?;
        let g = &self.gq;
        let ga2g = g.tr_matmul(&self.a0sq.as_dense().matmul(g));
        let first = parts.gtg_inv_sqrt.matmul(&ga2g).matmul(&parts.gtg_inv_sqrt);
        let second = parts
            .gtg_sqrt
            .matmul(&parts.gag_inv)
            .matmul(&parts.gtg_sqrt);
        Ok(first.sub(&second).symmetric_part())
    }
}

/// Splits a stacked `(q, p)` vector.
pub fn split_state(u: &[f64]) -> (&[f64], &[f64]) {
    u.split_at(u.len() / 2)
}

/// Stacks `q` and `p`.
pub fn join_state(q: &[f64], p: &[f64]) -> Vec<f64> {
    let mut u = Vec::with_capacity(q.len() + p.len());
    u.extend_from_slice(q);
    u.extend_from_slice(p);
    u
}
