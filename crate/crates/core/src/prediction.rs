//! Exact and reduced conditional-mean evolution for `du/dt = L u`.
//!
//! The invariant measure has density proportional to `exp(-u^T A u / 2)`,
//! which is invariant under the flow when `L^T A + A L = 0`. Observations are
//! `v0 = G^T u(0)`. With `M = G^T A^-1 G` and `K = L A^-1`:
//!
//! * conditional mean: `A^-1 G M^-1 v0`
//! * exact mean: `S(t) A^-1 G M^-1 v0`, `S(t) = exp(t L)`
//! * reduced mean: `A^-1 G M^-1 v(t)` with `dv/dt = G^T K G M^-1 v`
//! * defect: `E = L^T G + G M^-1 G^T K G`; the error `e(t)` (reduced minus
//!   exact) satisfies `|A^{1/2} e(t)| <= t |A^{-1/2} E M^{-1/2}| |M^{-1/2} v0|`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{
    self, dot, expm, integrate_matrix_curve, inverse_condition, norm2, spd_sqrt, spectral_norm,
    sub_vec, Cholesky, DenseMatrix, SpdMatrix, Tolerances,
};
use crate::stochastic::RngStream;

/// Linear system `du/dt = L u` together with the measure matrix `A`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    l: DenseMatrix,
    a: SpdMatrix,
    a_chol: Cholesky,
    a_sqrt: SpdMatrix,
    a_inv_sqrt: SpdMatrix,
    k: DenseMatrix,
    invariance_residual: f64,
}

impl LinearSystem {
    pub fn new(l: DenseMatrix, a: SpdMatrix) -> Result<Self> {
        Self::with_tolerances(l, a, &Tolerances::default())
    }

    /// Rejects the pair unless `|L^T A + A L|_2 <= tol.invariance |A|_2 |L|_2`.
    pub fn with_tolerances(l: DenseMatrix, a: SpdMatrix, tol: &Tolerances) -> Result<Self> {
        if !l.is_square() {
            return Err(Error::NotSquare {
                rows: l.rows(),
                cols: l.cols(),
            });
        }
        if l.rows() != a.dim() {
            return Err(Error::DimensionMismatch {
                op: "LinearSystem::new",
                expected: a.dim(),
                found: l.rows(),
            });
        }
        if !l.is_finite() {
            return Err(Error::NonFinite("generator L"));
        }
        let a_dense = a.as_dense();
        let lta = l.tr_matmul(a_dense);
        let residual = spectral_norm(&lta.add(&lta.transpose()));
        let limit = tol.invariance * spectral_norm(a_dense) * spectral_norm(&l);
        if residual > limit {
            return Err(Error::InvarianceViolated { residual, limit });
        }

        let a_chol = Cholesky::new(&a)?;
        let (a_sqrt, a_inv_sqrt) = linalg::spd_sqrt_with(&a, tol.spd_eigen)?;
        // K = L A^-1 = (A^-1 L^T)^T
        let k = a_chol.solve(&l.transpose()).transpose();
        Ok(Self {
            l,
            a,
            a_chol,
            a_sqrt,
            a_inv_sqrt,
            k,
            invariance_residual: residual,
        })
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    pub fn generator(&self) -> &DenseMatrix {
        &self.l
    }

    pub fn measure_matrix(&self) -> &SpdMatrix {
        &self.a
    }

    /// `K = L A^-1`, skew-symmetric up to the invariance tolerance.
    pub fn k(&self) -> &DenseMatrix {
        &self.k
    }

    pub fn a_sqrt(&self) -> &SpdMatrix {
        &self.a_sqrt
    }

    pub fn a_inv_sqrt(&self) -> &SpdMatrix {
        &self.a_inv_sqrt
    }

    pub fn a_solve(&self, b: &DenseMatrix) -> DenseMatrix {
        self.a_chol.solve(b)
    }

    /// `|L^T A + A L|_2` as measured at construction.
    pub fn invariance_residual(&self) -> f64 {
        self.invariance_residual
    }

    /// Hamiltonian `u^T A u / 2`.
    pub fn energy(&self, u: &[f64]) -> f64 {
        0.5 * self.a.quadratic_form(u)
    }

    /// Energy norm `|A^{1/2} u|`.
    pub fn a_norm(&self, u: &[f64]) -> f64 {
        libm::sqrt(self.a.quadratic_form(u).max(0.0))
    }

    /// Fundamental matrix `S(t) = exp(t L)`.
    pub fn propagator(&self, t: f64) -> Result<DenseMatrix> {
        expm(&self.l, t)
    }
}

/// Something that can apply the fundamental matrix `S(t)` of a linear flow.
///
/// [`LinearSystem`] implements it with a matrix exponential; systems with a
/// closed-form solution can plug in their own.
pub trait Flow {
    fn state_dim(&self) -> usize;
    fn flow(&self, t: f64, x: &[f64]) -> Result<Vec<f64>>;
}

impl Flow for LinearSystem {
    fn state_dim(&self) -> usize {
        self.dim()
    }

    fn flow(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.propagator(t)?.matvec(x))
    }
}

/// Constraint matrix `G` (`m x n`, full column rank) with derived quantities
/// for a particular [`LinearSystem`].
#[derive(Debug, Clone)]
pub struct ConstraintSet {
    g: DenseMatrix,
    a_inv_g: DenseMatrix,
    m: SpdMatrix,
    m_chol: Cholesky,
    m_inv_sqrt: SpdMatrix,
    gkg: DenseMatrix,
    reduced: DenseMatrix,
}

impl ConstraintSet {
    pub fn new(sys: &LinearSystem, g: DenseMatrix) -> Result<Self> {
        Self::with_tolerances(sys, g, &Tolerances::default())
    }

    pub fn with_tolerances(sys: &LinearSystem, g: DenseMatrix, tol: &Tolerances) -> Result<Self> {
        if g.rows() != sys.dim() {
            return Err(Error::DimensionMismatch {
                op: "ConstraintSet::new",
                expected: sys.dim(),
                found: g.rows(),
            });
        }
        if g.cols() == 0 || g.cols() > g.rows() {
            return Err(Error::TooManyConstraints {
                rows: g.rows(),
                cols: g.cols(),
            });
        }
        if !g.is_finite() {
            return Err(Error::NonFinite("constraint matrix G"));
        }
        let ratio = inverse_condition(&g);
        if !(ratio > tol.rank) {
            return Err(Error::RankDeficient { ratio });
        }

        let a_inv_g = sys.a_solve(&g);
        let m = SpdMatrix::new(g.tr_matmul(&a_inv_g))?;
        let m_chol = Cholesky::new(&m).map_err(|_| Error::SingularM)?;
        let (_, m_inv_sqrt) = spd_sqrt(&m).map_err(|_| Error::SingularM)?;

        // K itself is only skew up to the invariance tolerance.
        let raw = g.tr_matmul(&sys.k().matmul(&g));
        let residual = spectral_norm(&raw.add(&raw.transpose()));
        let g_norm = spectral_norm(&g);
        let limit = (tol.skew * spectral_norm(&raw))
            .max(tol.invariance * g_norm * g_norm * spectral_norm(sys.k()));
        if residual > limit {
            return Err(Error::NotSkew { residual });
        }
        let gkg = raw.sub(&raw.transpose()).scale(0.5);
        // G^T K G M^-1 = (M^-1 (G^T K G)^T)^T
        let reduced = m_chol.solve(&gkg.transpose()).transpose();
        Ok(Self {
            g,
            a_inv_g,
            m,
            m_chol,
            m_inv_sqrt,
            gkg,
            reduced,
        })
    }

    pub fn g(&self) -> &DenseMatrix {
        &self.g
    }

    pub fn num_constraints(&self) -> usize {
        self.g.cols()
    }

    /// `M = G^T A^-1 G`.
    pub fn m_matrix(&self) -> &SpdMatrix {
        &self.m
    }

    pub fn m_inv_sqrt(&self) -> &SpdMatrix {
        &self.m_inv_sqrt
    }

    /// Skew-symmetric `G^T K G`.
    pub fn gkg(&self) -> &DenseMatrix {
        &self.gkg
    }

    /// `M^-1 x`.
    pub fn m_solve(&self, x: &[f64]) -> Vec<f64> {
        self.m_chol.solve_vec(x)
    }

    /// `v^T M^-1 v`, the conserved quantity of the reduced dynamics.
    pub fn reduced_energy(&self, v: &[f64]) -> f64 {
        dot(v, &self.m_solve(v))
    }

    /// `A^-1 G M^-1 v`.
    pub fn lift(&self, v: &[f64]) -> Vec<f64> {
        self.a_inv_g.matvec(&self.m_solve(v))
    }

    /// `A^-1 G`.
    pub fn a_inv_g(&self) -> &DenseMatrix {
        &self.a_inv_g
    }
}

/// Exact and reduced means at one time together with the error bound.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionResult {
    pub t: f64,
    pub exact_mean: Vec<f64>,
    pub approx_mean: Vec<f64>,
    /// `|A^{1/2} (approx - exact)|`.
    pub error_a_norm: f64,
    pub lemma1_bound: f64,
}

fn check_v0(c: &ConstraintSet, v0: &[f64]) -> Result<()> {
    if v0.len() != c.num_constraints() {
        return Err(Error::DimensionMismatch {
            op: "constraint values",
            expected: c.num_constraints(),
            found: v0.len(),
        });
    }
    if v0.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("v0"));
    }
    Ok(())
}

fn check_pair(sys: &LinearSystem, c: &ConstraintSet) -> Result<()> {
    if c.g.rows() != sys.dim() {
        return Err(Error::DimensionMismatch {
            op: "constraint set / system",
            expected: sys.dim(),
            found: c.g.rows(),
        });
    }
    Ok(())
}

/// Mean of the invariant measure restricted to `G^T u = v0`: `A^-1 G M^-1 v0`.
pub fn conditional_mean(sys: &LinearSystem, c: &ConstraintSet, v0: &[f64]) -> Result<Vec<f64>> {
    check_pair(sys, c)?;
    check_v0(c, v0)?;
    if v0.iter().all(|&x| x == 0.0) {
        return Ok(vec![0.0; sys.dim()]);
    }
    Ok(c.lift(v0))
}

/// `S(t) A^-1 G M^-1 v0`.
pub fn exact_mean(sys: &LinearSystem, c: &ConstraintSet, v0: &[f64], t: f64) -> Result<Vec<f64>> {
    exact_mean_with(sys, sys, c, v0, t)
}

/// [`exact_mean`] with a caller-supplied flow for `S(t)`.
pub fn exact_mean_with<F: Flow + ?Sized>(
    flow: &F,
    sys: &LinearSystem,
    c: &ConstraintSet,
    v0: &[f64],
    t: f64,
) -> Result<Vec<f64>> {
    let mean = conditional_mean(sys, c, v0)?;
    if t == 0.0 || mean.iter().all(|&x| x == 0.0) {
        return Ok(mean);
    }
    flow.flow(t, &mean)
}

/// Generator of the reduced dynamics, `G^T K G M^-1` (`n x n`).
pub fn reduced_rhs(c: &ConstraintSet) -> DenseMatrix {
    c.reduced.clone()
}

/// `v(t) = exp(t G^T K G M^-1) v0`.
pub fn reduced_trajectory(c: &ConstraintSet, v0: &[f64], t: f64) -> Result<Vec<f64>> {
    check_v0(c, v0)?;
    if t == 0.0 {
        return Ok(v0.to_vec());
    }
    Ok(expm(&c.reduced, t)?.matvec(v0))
}

/// `A^-1 G M^-1 v(t)` with `v` from the reduced dynamics.
pub fn approx_mean(sys: &LinearSystem, c: &ConstraintSet, v0: &[f64], t: f64) -> Result<Vec<f64>> {
    check_pair(sys, c)?;
    let v = reduced_trajectory(c, v0, t)?;
    conditional_mean(sys, c, &v)
}

/// `E = L^T G + G M^-1 G^T K G` (`m x n`).
pub fn defect_matrix(sys: &LinearSystem, c: &ConstraintSet) -> Result<DenseMatrix> {
    check_pair(sys, c)?;
    let m_inv_gkg = c.m_chol.solve(&c.gkg);
    Ok(sys.l.tr_matmul(&c.g).add(&c.g.matmul(&m_inv_gkg)))
}

/// `A^{-1/2} E M^{-1/2}`, whose 2-norm drives the error bound.
pub fn scaled_defect(sys: &LinearSystem, c: &ConstraintSet) -> Result<DenseMatrix> {
    let e = defect_matrix(sys, c)?;
    Ok(sys
        .a_inv_sqrt
        .as_dense()
        .matmul(&e)
        .matmul(c.m_inv_sqrt.as_dense()))
}

/// `|A^{-1/2} E M^{-1/2}|_2`.
pub fn defect_norm(sys: &LinearSystem, c: &ConstraintSet) -> Result<f64> {
    Ok(spectral_norm(&scaled_defect(sys, c)?))
}

/// `t |A^{-1/2} E M^{-1/2}|_2 |M^{-1/2} v0|`.
pub fn lemma1_bound(sys: &LinearSystem, c: &ConstraintSet, v0: &[f64], t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParams("error bound needs t >= 0"));
    }
    check_v0(c, v0)?;
    if t == 0.0 || v0.iter().all(|&x| x == 0.0) {
        return Ok(0.0);
    }
    let factor = defect_norm(sys, c)?;
    Ok(t * factor * norm2(&c.m_inv_sqrt.as_dense().matvec(v0)))
}

/// `e(t) = int_0^t S(t-s) A^-1 E M^-1 v(s) ds` by adaptive quadrature.
pub fn error_integral(
    sys: &LinearSystem,
    c: &ConstraintSet,
    v0: &[f64],
    t: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    error_integral_with(sys, sys, c, v0, t, tol)
}

/// [`error_integral`] with a caller-supplied flow for `S(t - s)`.
pub fn error_integral_with<F: Flow + ?Sized>(
    flow: &F,
    sys: &LinearSystem,
    c: &ConstraintSet,
    v0: &[f64],
    t: f64,
    tol: f64,
) -> Result<Vec<f64>> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParams("error integral needs t >= 0"));
    }
    check_pair(sys, c)?;
    check_v0(c, v0)?;
    let dim = sys.dim();
    if t == 0.0 || v0.iter().all(|&x| x == 0.0) {
        return Ok(vec![0.0; dim]);
    }
    let e = defect_matrix(sys, c)?;
    let m_inv_v_to_state = sys.a_solve(&e);
    let mut failure = None;
    let integral = integrate_matrix_curve(
        |s| {
            let integrand = reduced_trajectory(c, v0, s)
                .map(|v| m_inv_v_to_state.matvec(&c.m_solve(&v)))
                .and_then(|w| flow.flow(t - s, &w));
            match integrand {
                Ok(x) => x,
                Err(err) => {
                    failure.get_or_insert(err);
                    vec![0.0; dim]
                }
            }
        },
        0.0,
        t,
        tol,
    )?;
    match failure {
        Some(err) => Err(err),
        None => Ok(integral),
    }
}

/// Exact and reduced means at `t`, their energy-norm distance and the bound.
pub fn predict(
    sys: &LinearSystem,
    c: &ConstraintSet,
    v0: &[f64],
    t: f64,
) -> Result<PredictionResult> {
    let exact_mean = exact_mean(sys, c, v0, t)?;
    let approx_mean = approx_mean(sys, c, v0, t)?;
    let error_a_norm = sys.a_norm(&sub_vec(&approx_mean, &exact_mean));
    let lemma1_bound = lemma1_bound(sys, c, v0, t.abs())?;
    Ok(PredictionResult {
        t,
        exact_mean,
        approx_mean,
        error_a_norm,
        lemma1_bound,
    })
}

/// Random system satisfying `L^T A + A L = 0` by construction.
///
/// `A = R^T R + I` with standard normal `R`, `L = W_skew A` with
/// `W_skew = (W - W^T) / 2` for standard normal `W`. Deterministic in `seed`.
pub fn random_invariant_system(m: usize, seed: u64) -> Result<LinearSystem> {
    if m < 2 {
        return Err(Error::InvalidParams("random system needs m >= 2"));
    }
    let mut normals = RngStream::new(seed, 0).normals();
    let r = DenseMatrix::from_fn(m, m, |_, _| normals.draw());
    let w = DenseMatrix::from_fn(m, m, |_, _| normals.draw());
    let a = SpdMatrix::new(r.tr_matmul(&r).add(&DenseMatrix::identity(m)))?;
    let skew = w.sub(&w.transpose()).scale(0.5);
    let l = skew.matmul(a.as_dense());
    LinearSystem::new(l, a)
}

/// Random `m x n` constraint matrix with standard normal entries.
pub fn random_constraints(m: usize, n: usize, seed: u64) -> DenseMatrix {
    let mut normals = RngStream::new(seed, 1).normals();
    DenseMatrix::from_fn(m, n, |_, _| normals.draw())
}
