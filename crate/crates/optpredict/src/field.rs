use std::f64::consts::PI;

/// Number of points in the physical-space plot grid.
pub const FIELD_POINTS: usize = 256;

/// Evaluates the real Fourier series with coefficient layout
/// `(a_m, ..., a_0, b_1, ..., b_m)` on `points` equispaced nodes of
/// `[0, 2pi)`.
pub fn evaluate(coeffs: &[f64], points: usize) -> Vec<f64> {
    let m = coeffs.len() / 2;
    (0..points)
        .map(|j| {
            let x = 2.0 * PI * j as f64 / points as f64;
            let mut u = coeffs[m] / (2.0 * PI).sqrt();
            for k in 1..=m {
                let (s, c) = (k as f64 * x).sin_cos();
                u += (coeffs[m - k] * c + coeffs[m + k] * s) / PI.sqrt();
            }
            u
        })
        .collect()
}
