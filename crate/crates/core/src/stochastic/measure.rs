use alloc::vec::Vec;

use super::RngStream;
use crate::error::Result;
use crate::klein_gordon::{KgSpectralSystem, KgState};

/// The invariant Gaussian measure `exp(-|u|_A^2 / 2)` of a Klein-Gordon
/// system. Under it the entries of `Lambda q` and `p` are independent
/// standard normals.
#[derive(Debug, Clone, Copy)]
pub struct GaussianMeasure<'a> {
    sys: &'a KgSpectralSystem,
}

impl<'a> GaussianMeasure<'a> {
    pub fn new(sys: &'a KgSpectralSystem) -> Self {
        Self { sys }
    }

    pub fn system(&self) -> &'a KgSpectralSystem {
        self.sys
    }

    /// `q = Lambda^-1 xi`, `p = eta`. All of `xi` is drawn before `eta`.
    pub fn sample_prior(&self, rng: RngStream) -> KgState {
        let modes = self.sys.params().modes();
        let mut normals = rng.normals();
        let xi = normals.vector(modes);
        let p = normals.vector(modes);
        let q: Vec<f64> = xi
            .iter()
            .zip(self.sys.lambda())
            .map(|(x, w)| x / w)
            .collect();
        KgState { q, p }
    }

    /// A draw from the measure restricted to `G^T u = v0`, obtained by
    /// projecting a prior draw `w` to `w + A^-1 G M^-1 (v0 - G^T w)`.
    pub fn sample_conditional(&self, v0: &[f64], rng: RngStream) -> Result<KgState> {
        let w = self.sample_prior(rng);
        let gw = self.sys.constraint_values(&w)?;
        let residual: Vec<f64> = v0.iter().zip(&gw).map(|(a, b)| a - b).collect();
        let correction = self.sys.exact_mean(&residual, 0.0)?;
        let add = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x + y).collect();
        Ok(KgState {
            q: add(&w.q, &correction.q),
            p: add(&w.p, &correction.p),
        })
    }
}
