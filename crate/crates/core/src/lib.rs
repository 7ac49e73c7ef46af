//! Optimal prediction for linear systems with a Gaussian invariant measure.
//!
//! Given `du/dt = L u` with `L^T A + A L = 0` and partial initial data
//! `G^T u(0) = v0`, this crate computes
//!
//! * the conditional mean `A^-1 G M^-1 v0` with `M = G^T A^-1 G`,
//! * its exact evolution `S(t) A^-1 G M^-1 v0`,
//! * the reduced evolution obtained by propagating `v(t)` with the
//!   `n x n` generator `G^T K G M^-1` (`K = L A^-1`) and lifting back,
//! * the error between the two and an a-priori energy-norm bound.
//!
//! The [`klein_gordon`] module specialises everything to a Fourier
//! discretisation of `u_tt = u_xx - u` on a periodic interval, where all the
//! relevant matrices diagonalise in a real DFT basis. [`stochastic`] draws
//! initial data from the invariant measure and runs Monte Carlo checks of the
//! probabilistic error and convergence statements.
//!
//! The crate is `no_std` and only needs `alloc`. Transcendental functions come
//! from `libm`, so results do not depend on the platform's C math library.

#![no_std]
// `!(x >= 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Triangular solves read more clearly with explicit indices.
#![allow(clippy::needless_range_loop)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;

pub mod hamiltonian;
pub mod klein_gordon;
pub mod linalg;
pub mod prediction;
pub mod stochastic;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, SpdMatrix};

/// Semantic version of this crate, stamped into experiment reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
