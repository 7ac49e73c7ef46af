//! Fourier discretisation of `u_tt = u_xx - u` on `[0, 2pi)` with periodic
//! boundary conditions, observed through Gaussian-smoothed point values.
//!
//! # Mode ordering
//!
//! A state with resolution `m` stores `2m + 1` real coefficients of `u` in
//!
//! ```text
//! q = (a_m, ..., a_1, a_0, b_1, ..., b_m)
//! ```
//!
//! against the orthonormal basis `cos(kx)/sqrt(pi)`, `1/sqrt(2 pi)`,
//! `sin(kx)/sqrt(pi)`. Index `i` therefore carries wavenumber `|i - m|`, a
//! cosine for `i < m` and a sine for `i > m`. `p` holds the coefficients of
//! `u_t` in the same order, and `Lambda = diag(sqrt(k^2 + 1))` uses it too.
//!
//! The constraints are `2n + 1` smoothed values at `x_a = 2 pi a / (2n + 1)`
//! with a Gaussian kernel whose Fourier multipliers are `exp(-k^2 sigma^2 / 4)`
//! for `|k| <= m` and zero beyond. The resolution is `m = n + r (2n + 1)`, so
//! `r` counts how many aliasing bands of the constraint grid the state
//! resolves.
//!
//! Every matrix that appears in the prediction problem is diagonalised by
//! the real DFT matrix `Q` of the constraint grid. The eigenvalues are the
//! aliasing sums `d1`, `d2`, `d3` and everything here is computed from them
//! in `O(m n)` time.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::hamiltonian::{join_state, HamiltonianBlocks};
use crate::linalg::{dot, DenseMatrix, SpdMatrix};
use crate::prediction::{ConstraintSet, Flow, LinearSystem};

/// Resolution and kernel width.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KgParams {
    n: usize,
    r: usize,
    sigma: f64,
}

impl KgParams {
    pub fn new(n: usize, r: usize, sigma: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParams("n must be at least 1"));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParams("sigma must be positive and finite"));
        }
        Ok(Self { n, r, sigma })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Number of constraint points, `2n + 1`.
    pub fn num_points(&self) -> usize {
        2 * self.n + 1
    }

    /// Highest resolved wavenumber `n + r (2n + 1)`.
    pub fn m(&self) -> usize {
        self.n + self.r * self.num_points()
    }

    /// Length of `q` (and of `p`).
    pub fn modes(&self) -> usize {
        2 * self.m() + 1
    }

    /// Same `n` and `sigma` at another `r`.
    pub fn with_r(&self, r: usize) -> Self {
        Self { r, ..*self }
    }

    /// `(2n + 1) sigma^2`.
    pub fn kernel_weight(&self) -> f64 {
        self.num_points() as f64 * self.sigma * self.sigma
    }

    /// `(2n + 1) sigma^2 >= 2`, the condition of the defect bound.
    pub fn lemma2_hypothesis(&self) -> bool {
        at_least(self.kernel_weight(), 2.0)
    }

    /// `(2n + 1) sigma^2 >= 6 (nu + 1) log(2n + 1)`, the condition of the
    /// probabilistic error and convergence statements.
    pub fn theorem_hypothesis(&self, nu: f64) -> bool {
        at_least(
            self.kernel_weight(),
            6.0 * (nu + 1.0) * libm::log(self.num_points() as f64),
        )
    }
}

/// `x >= bound` up to rounding, so that `sigma = sqrt(c / (2n + 1))` lands
/// on the boundary instead of just below it.
fn at_least(x: f64, bound: f64) -> bool {
    x >= bound * (1.0 - 8.0 * f64::EPSILON)
}

/// Wavenumber carried by index `i` of a state with resolution `m`.
pub fn wavenumber(m: usize, i: usize) -> usize {
    i.abs_diff(m)
}

/// `sqrt(k^2 + 1)`.
pub fn omega(k: usize) -> f64 {
    let k = k as f64;
    libm::sqrt(k * k + 1.0)
}

/// `2 pi j / N` with `j` reduced mod `N` first, so large products keep full
/// accuracy.
fn grid_angle(j: usize, points: usize) -> f64 {
    2.0 * PI * (j % points) as f64 / points as f64
}

/// Value at `x_a` of basis function `i` of a resolution-`m` state.
fn basis_value(m: usize, i: usize, alpha: usize, points: usize) -> f64 {
    let k = wavenumber(m, i);
    if k == 0 {
        return 1.0 / libm::sqrt(2.0 * PI);
    }
    let x = grid_angle(k * alpha, points);
    let trig = if i < m { libm::cos(x) } else { libm::sin(x) };
    trig / libm::sqrt(PI)
}

/// The spectral system for one parameter set. Immutable once built.
#[derive(Debug, Clone)]
pub struct KgSpectralSystem {
    params: KgParams,
    lambda: Vec<f64>,
    gamma_scale: Vec<f64>,
    gt: DenseMatrix,
    q_matrix: DenseMatrix,
    d1: Vec<f64>,
    d2: Vec<f64>,
    d3: Vec<f64>,
}

impl KgSpectralSystem {
    pub fn build(params: KgParams) -> Result<Self> {
        let m = params.m();
        let n = params.n();
        let points = params.num_points();
        let modes = params.modes();
        let s2 = params.sigma() * params.sigma();

        let lambda: Vec<f64> = (0..modes).map(|i| omega(wavenumber(m, i))).collect();
        let gamma_scale: Vec<f64> = (0..modes)
            .map(|i| {
                let k = wavenumber(m, i) as f64;
                libm::exp(-k * k * s2 / 4.0)
            })
            .collect();
        let gt = DenseMatrix::from_fn(points, modes, |alpha, i| {
            gamma_scale[i] * basis_value(m, i, alpha, points)
        });

        // Q has the same layout as a resolution-n state, scaled to be orthonormal.
        let q_matrix = DenseMatrix::from_fn(points, points, |alpha, j| {
            basis_value(n, j, alpha, points) * libm::sqrt(2.0 * PI / points as f64)
        });

        let weight = points as f64 / (2.0 * PI);
        let mut d1 = vec![0.0; points];
        let mut d2 = vec![0.0; points];
        let mut d3 = vec![0.0; points];
        for (j, ((e1, e2), e3)) in d1.iter_mut().zip(&mut d2).zip(&mut d3).enumerate() {
            let k = j as i64 - n as i64;
            // Sum from the largest |l| down so the tiny tails go in first.
            let r = params.r() as i64;
            let mut aliases: Vec<i64> = (-r..=r).map(|a| k + a * points as i64).collect();
            aliases.sort_by_key(|l| core::cmp::Reverse(l.unsigned_abs()));
            for l in aliases {
                let l2 = (l * l) as f64;
                let g = libm::exp(-l2 * s2 / 2.0);
                *e1 += g;
                *e2 += g * (l2 + 1.0);
                *e3 += g / (l2 + 1.0);
            }
            *e1 *= weight;
            *e2 *= weight;
            *e3 *= weight;
        }

        Ok(Self {
            params,
            lambda,
            gamma_scale,
            gt,
            q_matrix,
            d1,
            d2,
            d3,
        })
    }

    pub fn params(&self) -> &KgParams {
        &self.params
    }

    /// Diagonal of `Lambda`.
    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    /// Kernel multipliers `exp(-k^2 sigma^2 / 4)` per mode.
    pub fn gamma_scale(&self) -> &[f64] {
        &self.gamma_scale
    }

    /// `G^T`, of shape `(2n + 1) x (2m + 1)`.
    pub fn gt(&self) -> &DenseMatrix {
        &self.gt
    }

    pub fn q_matrix(&self) -> &DenseMatrix {
        &self.q_matrix
    }

    /// Eigenvalues of `G^T G` in the column order of `Q`.
    pub fn d1(&self) -> &[f64] {
        &self.d1
    }

    /// Eigenvalues of `G^T Lambda^2 G`.
    pub fn d2(&self) -> &[f64] {
        &self.d2
    }

    /// Eigenvalues of `G^T Lambda^-2 G`.
    pub fn d3(&self) -> &[f64] {
        &self.d3
    }

    /// Frequencies of the reduced system, `sqrt(d1 / d3)`.
    pub fn reduced_frequencies(&self) -> Vec<f64> {
        self.d1
            .iter()
            .zip(&self.d3)
            .map(|(a, b)| libm::sqrt(a / b))
            .collect()
    }

    /// `|F|_2 = sqrt(max (d2/d1 - d1/d3))`. Exactly zero without excess
    /// modes, where the difference is pure roundoff.
    pub fn exact_defect_norm(&self) -> f64 {
        if self.params.r() == 0 {
            return 0.0;
        }
        let worst = self
            .d1
            .iter()
            .zip(&self.d2)
            .zip(&self.d3)
            .map(|((a, b), c)| b / a - a / c)
            .fold(0.0, f64::max);
        libm::sqrt(worst)
    }

    /// `A0^2 = Lambda^2` with `Gq = Gp = G`.
    pub fn hamiltonian_blocks(&self) -> Result<HamiltonianBlocks> {
        let lsq: Vec<f64> = self.lambda.iter().map(|w| w * w).collect();
        HamiltonianBlocks::with_equal_blocks(SpdMatrix::from_diag(&lsq)?, self.gt.transpose())
    }

    /// Dense `2(2m+1)` system for cross-checks with the generic path.
    pub fn assemble(&self) -> Result<(LinearSystem, ConstraintSet)> {
        self.hamiltonian_blocks()?.assemble()
    }

    fn check_state(&self, state: &KgState) -> Result<()> {
        let modes = self.params.modes();
        for len in [state.q.len(), state.p.len()] {
            if len != modes {
                return Err(Error::DimensionMismatch {
                    op: "Klein-Gordon state",
                    expected: modes,
                    found: len,
                });
            }
        }
        Ok(())
    }

    fn check_v0(&self, v0: &[f64]) -> Result<()> {
        let expected = 2 * self.params.num_points();
        if v0.len() != expected {
            return Err(Error::DimensionMismatch {
                op: "Klein-Gordon constraint values",
                expected,
                found: v0.len(),
            });
        }
        if v0.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("v0"));
        }
        Ok(())
    }

    /// `|Lambda q|^2 + |p|^2`, twice the energy.
    pub fn energy_norm_sq(&self, state: &KgState) -> f64 {
        let lq: f64 = state
            .q
            .iter()
            .zip(&self.lambda)
            .map(|(q, w)| (w * q) * (w * q))
            .sum();
        lq + dot(&state.p, &state.p)
    }

    pub fn a_norm(&self, state: &KgState) -> f64 {
        libm::sqrt(self.energy_norm_sq(state))
    }

    /// Exact solution: each mode rotates in the `(Lambda q, p)` plane.
    pub fn propagate(&self, state: &KgState, t: f64) -> Result<KgState> {
        self.check_state(state)?;
        let mut out = KgState::zeros(self.params.modes());
        for (i, &w) in self.lambda.iter().enumerate() {
            let (s, c) = libm::sincos(w * t);
            let (q, p) = (state.q[i], state.p[i]);
            out.q[i] = c * q + s / w * p;
            out.p[i] = -w * s * q + c * p;
        }
        Ok(out)
    }

    /// `(G^T q, G^T p)`.
    pub fn constraint_values(&self, state: &KgState) -> Result<Vec<f64>> {
        self.check_state(state)?;
        Ok(join_state(
            &self.gt.matvec(&state.q),
            &self.gt.matvec(&state.p),
        ))
    }

    /// `G Q diag(1/d) Q^T w` on the `2n + 1` constraint coordinates, and
    /// `Lambda^-2` of it when `divide_lambda_sq` is set.
    fn lift_block(&self, qt_w: &[f64], d: &[f64], divide_lambda_sq: bool) -> Vec<f64> {
        let scaled: Vec<f64> = qt_w.iter().zip(d).map(|(x, d)| x / d).collect();
        let mut u = self.gt.tr_matvec(&self.q_matrix.matvec(&scaled));
        if divide_lambda_sq {
            for (x, w) in u.iter_mut().zip(&self.lambda) {
                *x /= w * w;
            }
        }
        u
    }

    fn check_diagonals(&self) -> Result<()> {
        let ok = |d: &[f64]| d.iter().all(|x| *x > 0.0 && x.is_finite());
        if ok(&self.d1) && ok(&self.d3) {
            Ok(())
        } else {
            Err(Error::SingularM)
        }
    }

    /// Conditional mean given `v0 = (v_q, v_p)`, propagated exactly to `t`.
    pub fn exact_mean(&self, v0: &[f64], t: f64) -> Result<KgState> {
        self.check_v0(v0)?;
        self.check_diagonals()?;
        let points = self.params.num_points();
        let wq = self.q_matrix.tr_matvec(&v0[..points]);
        let wp = self.q_matrix.tr_matvec(&v0[points..]);
        let mean = KgState {
            q: self.lift_block(&wq, &self.d3, true),
            p: self.lift_block(&wp, &self.d1, false),
        };
        self.propagate(&mean, t)
    }

    /// Constraint values `v(t)` of the reduced system.
    pub fn reduced_values(&self, v0: &[f64], t: f64) -> Result<Vec<f64>> {
        self.check_v0(v0)?;
        self.check_diagonals()?;
        let (wq, wp) = self.reduced_rotation(v0, t);
        Ok(join_state(
            &self.q_matrix.matvec(&wq),
            &self.q_matrix.matvec(&wp),
        ))
    }

    /// Reduced state in the `Q` basis.
    fn reduced_rotation(&self, v0: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
        let points = self.params.num_points();
        let wq0 = self.q_matrix.tr_matvec(&v0[..points]);
        let wp0 = self.q_matrix.tr_matvec(&v0[points..]);
        let mut wq = vec![0.0; points];
        let mut wp = vec![0.0; points];
        for (k, w) in self.reduced_frequencies().into_iter().enumerate() {
            let (s, c) = libm::sincos(w * t);
            wq[k] = c * wq0[k] + s / w * wp0[k];
            wp[k] = -w * s * wq0[k] + c * wp0[k];
        }
        (wq, wp)
    }

    /// `v0^T M^-1 v0`, conserved by the reduced flow.
    pub fn reduced_energy(&self, v0: &[f64]) -> Result<f64> {
        self.check_v0(v0)?;
        self.check_diagonals()?;
        let points = self.params.num_points();
        let wq = self.q_matrix.tr_matvec(&v0[..points]);
        let wp = self.q_matrix.tr_matvec(&v0[points..]);
        let q: f64 = wq.iter().zip(&self.d3).map(|(w, d)| w * w / d).sum();
        let p: f64 = wp.iter().zip(&self.d1).map(|(w, d)| w * w / d).sum();
        Ok(q + p)
    }

    /// `t |F|_2 |M^{-1/2} v0|`, a bound on `|approx - exact|_A` at time `t`.
    pub fn lemma1_bound(&self, v0: &[f64], t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParams("t must be nonnegative"));
        }
        Ok(t * self.exact_defect_norm() * libm::sqrt(self.reduced_energy(v0)?))
    }

    /// Mean predicted by the reduced system: propagate `v` with the
    /// `2(2n + 1)` reduced generator, then lift.
    pub fn approx_mean(&self, v0: &[f64], t: f64) -> Result<KgState> {
        self.check_v0(v0)?;
        self.check_diagonals()?;
        let (wq, wp) = self.reduced_rotation(v0, t);
        Ok(KgState {
            q: self.lift_block(&wq, &self.d3, true),
            p: self.lift_block(&wp, &self.d1, false),
        })
    }
}

impl Flow for KgSpectralSystem {
    fn state_dim(&self) -> usize {
        2 * self.params.modes()
    }

    fn flow(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let state = KgState::from_stacked(x)?;
        Ok(self.propagate(&state, t)?.to_stacked())
    }
}

/// Fourier coefficients of `u` and `u_t`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct KgState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl KgState {
    pub fn new(q: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        if q.len() != p.len() {
            return Err(Error::DimensionMismatch {
                op: "KgState::new",
                expected: q.len(),
                found: p.len(),
            });
        }
        if q.len().is_multiple_of(2) {
            return Err(Error::InvalidParams("state length must be odd"));
        }
        if q.iter().chain(&p).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("state"));
        }
        Ok(Self { q, p })
    }

    pub fn zeros(modes: usize) -> Self {
        Self {
            q: vec![0.0; modes],
            p: vec![0.0; modes],
        }
    }

    /// Componentwise `self - other`.
    pub fn difference(&self, other: &KgState) -> Result<KgState> {
        if self.q.len() != other.q.len() {
            return Err(Error::DimensionMismatch {
                op: "KgState::difference",
                expected: self.q.len(),
                found: other.q.len(),
            });
        }
        let sub = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        Ok(KgState {
            q: sub(&self.q, &other.q),
            p: sub(&self.p, &other.p),
        })
    }

    /// Highest wavenumber held.
    pub fn m(&self) -> usize {
        self.q.len() / 2
    }

    /// `(q, p)` as one vector.
    pub fn to_stacked(&self) -> Vec<f64> {
        join_state(&self.q, &self.p)
    }

    pub fn from_stacked(u: &[f64]) -> Result<Self> {
        if !u.len().is_multiple_of(2) {
            return Err(Error::InvalidParams("stacked state length must be even"));
        }
        let (q, p) = u.split_at(u.len() / 2);
        Self::new(q.to_vec(), p.to_vec())
    }
}

/// Zero-pads a resolution-`from_r` state to resolution `to_r` at the same `n`.
pub fn embed(state: &KgState, n: usize, from_r: usize, to_r: usize) -> Result<KgState> {
    if to_r < from_r {
        return Err(Error::ShrinkNotAllowed {
            from: from_r,
            to: to_r,
        });
    }
    let (from_m, to_m) = resolutions(state, n, from_r, to_r)?;
    let pad = to_m - from_m;
    let grow = |v: &[f64]| {
        let mut out = vec![0.0; 2 * to_m + 1];
        out[pad..pad + v.len()].copy_from_slice(v);
        out
    };
    Ok(KgState {
        q: grow(&state.q),
        p: grow(&state.p),
    })
}

/// Drops modes above resolution `to_r`. Inverse of [`embed`] on its range.
pub fn restrict(state: &KgState, n: usize, from_r: usize, to_r: usize) -> Result<KgState> {
    if to_r > from_r {
        return Err(Error::InvalidParams(
            "restrict target must not exceed source",
        ));
    }
    let (from_m, to_m) = resolutions(state, n, from_r, to_r)?;
    let cut = from_m - to_m;
    let shrink = |v: &[f64]| v[cut..cut + 2 * to_m + 1].to_vec();
    Ok(KgState {
        q: shrink(&state.q),
        p: shrink(&state.p),
    })
}

fn resolutions(state: &KgState, n: usize, from_r: usize, to_r: usize) -> Result<(usize, usize)> {
    let points = 2 * n + 1;
    let from_m = n + from_r * points;
    let to_m = n + to_r * points;
    let expected = 2 * from_m + 1;
    for len in [state.q.len(), state.p.len()] {
        if len != expected {
            return Err(Error::DimensionMismatch {
                op: "embed/restrict",
                expected,
                found: len,
            });
        }
    }
    Ok((from_m, to_m))
}

/// `1.6 (2n + 1) exp(-(2n + 1) sigma^2 / 4)`, an upper bound on `|F|_2`.
///
/// Fails with `HypothesisViolated` when `(2n + 1) sigma^2 < 2` unless `force`
/// is set, in which case the formula is evaluated anyway.
pub fn lemma2_bound(params: &KgParams, force: bool) -> Result<f64> {
    if !force && !params.lemma2_hypothesis() {
        return Err(Error::HypothesisViolated("(2n+1) sigma^2 >= 2"));
    }
    let points = params.num_points() as f64;
    Ok(1.6 * points * libm::exp(-params.kernel_weight() / 4.0))
}

/// `4 (2n + 1)^{-(nu + 1)(1 + r + r^2 (2n + 1))}`.
pub fn theorem2_epsilon(n: usize, nu: f64, r: usize) -> f64 {
    let points = (2 * n + 1) as f64;
    let r = r as f64;
    let exponent = (nu + 1.0) * (1.0 + r + r * r * points);
    4.0 * libm::pow(points, -exponent)
}
