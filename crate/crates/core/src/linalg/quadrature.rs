use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Maximum number of panels before giving up.
pub const MAX_PANELS: usize = 1 << 16;

// 8-point Gauss-Legendre rule on [-1, 1]; exact for polynomials of degree 15.
#[allow(clippy::excessive_precision)]
const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
#[allow(clippy::excessive_precision)]
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

fn gauss8<F>(f: &mut F, lo: f64, hi: f64, dim: usize) -> Vec<f64>
where
    F: FnMut(f64) -> Vec<f64>,
{
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let mut acc = vec![0.0; dim];
    for (&x, &w) in GL8_NODES.iter().zip(&GL8_WEIGHTS) {
        for s in [-x, x] {
            let fx = f(mid + half * s);
            assert_eq!(fx.len(), dim, "integrand changed dimension");
            for (a, v) in acc.iter_mut().zip(&fx) {
                *a += w * v;
            }
        }
    }
    acc.iter_mut().for_each(|a| *a *= half);
    acc
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Integrates a vector-valued function over `[a, b]`.
///
/// Composite 8-point Gauss-Legendre with adaptive bisection: a panel is
/// accepted when its two-half estimate differs from the whole-panel estimate
/// by at most its share `tol * len / (b - a)` of the budget (or by roundoff
/// relative to the panel value), so the summed error estimate stays below
/// `tol` in every component.
pub fn integrate_matrix_curve<F>(mut f: F, a: f64, b: f64, tol: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Vec<f64>,
{
    if !(a <= b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidParams(
            "integration interval must satisfy a <= b",
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParams(
            "quadrature tolerance must be positive",
        ));
    }
    let dim = f(a).len();
    let mut total = vec![0.0; dim];
    if a == b {
        return Ok(total);
    }
    let width = b - a;

    // Depth-first, left to right, so the summation order is fixed.
    let whole = gauss8(&mut f, a, b, dim);
    let mut stack = vec![(a, b, whole)];
    let mut panels = 1usize;
    while let Some((lo, hi, coarse)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = gauss8(&mut f, lo, mid, dim);
        let right = gauss8(&mut f, mid, hi, dim);
        let fine: Vec<f64> = left.iter().zip(&right).map(|(l, r)| l + r).collect();
        let err = max_diff(&fine, &coarse);
        let scale = fine.iter().fold(0.0, |m: f64, x| m.max(x.abs()));
        let budget = (tol * (hi - lo) / width).max(64.0 * f64::EPSILON * scale);
        if err <= budget || mid <= lo || mid >= hi {
            for (t, v) in total.iter_mut().zip(&fine) {
                *t += v;
            }
            continue;
        }
        panels += 1;
        if panels > MAX_PANELS {
            return Err(Error::ToleranceNotMet {
                panels,
                estimate: err,
            });
        }
        stack.push((mid, hi, right));
        stack.push((lo, mid, left));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_degree_15_exactly() {
        for deg in 0..=15 {
            let got = integrate_matrix_curve(|s| vec![libm::pow(s, deg as f64)], -1.0, 1.0, 1.0)
                .unwrap()[0];
            let exact = if deg % 2 == 1 {
                0.0
            } else {
                2.0 / (deg as f64 + 1.0)
            };
            assert!(
                (got - exact).abs() <= 1e-13,
                "degree {deg}: {got} vs {exact}"
            );
        }
    }

    #[test]
    fn reports_tolerance_failure() {
        // Needs far more than MAX_PANELS panels to resolve.
        let res = integrate_matrix_curve(|s| vec![libm::sin(1e7 * s)], 0.0, 1.0, 1e-14);
        assert!(matches!(res, Err(Error::ToleranceNotMet { .. })));
    }

    #[test]
    fn rejects_reversed_interval() {
        assert!(integrate_matrix_curve(|_| vec![1.0], 1.0, 0.0, 1e-8).is_err());
    }
}
