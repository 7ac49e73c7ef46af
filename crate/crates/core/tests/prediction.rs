mod common;

use common::{eigenvalues_small, gauss_inverse, gauss_solve, invariant_constraints};
use optpredict_core::linalg::{expm, norm2, spectral_norm, sub_vec};
use optpredict_core::prediction::*;
use optpredict_core::stochastic::RngStream;
use optpredict_core::{DenseMatrix, Error, SpdMatrix};
use proptest::prelude::*;

fn rotation_system() -> (LinearSystem, ConstraintSet) {
    let l = DenseMatrix::from_rows(&[[0.0, 1.0], [-1.0, 0.0]]);
    let sys = LinearSystem::new(l, SpdMatrix::identity(2)).unwrap();
    let g = DenseMatrix::from_rows(&[[1.0], [0.0]]);
    let c = ConstraintSet::new(&sys, g).unwrap();
    (sys, c)
}

fn random_case(m: usize, n: usize, seed: u64) -> (LinearSystem, ConstraintSet, Vec<f64>) {
    let sys = random_invariant_system(m, seed).unwrap();
    let g = random_constraints(m, n, seed);
    let c = ConstraintSet::new(&sys, g).unwrap();
    let v0 = RngStream::new(seed, 2).normals().vector(n);
    (sys, c, v0)
}

#[test]
fn conditional_mean_of_zero_data_is_zero() {
    let (sys, c, _) = random_case(5, 2, 1);
    assert_eq!(
        conditional_mean(&sys, &c, &[0.0, 0.0]).unwrap(),
        vec![0.0; 5]
    );
}

#[test]
fn conditional_mean_identity_measure_is_orthogonal_projection() {
    let m = 5;
    let l = DenseMatrix::from_fn(m, m, |i, j| match (i, j) {
        (0, 1) | (2, 3) => 1.0,
        (1, 0) | (3, 2) => -1.0,
        _ => 0.0,
    });
    let sys = LinearSystem::new(l, SpdMatrix::identity(m)).unwrap();
    let g = DenseMatrix::from_fn(m, 2, |i, j| if i == j { 1.0 } else { 0.0 });
    let c = ConstraintSet::new(&sys, g).unwrap();
    let mean = conditional_mean(&sys, &c, &[0.7, -1.3]).unwrap();
    let expect = [0.7, -1.3, 0.0, 0.0, 0.0];
    for (a, b) in mean.iter().zip(expect) {
        assert!((a - b).abs() < 1e-15);
    }
}

#[test]
fn conditional_mean_square_constraints_is_the_unique_point() {
    let (sys, c, v0) = random_case(3, 3, 17);
    let mean = conditional_mean(&sys, &c, &v0).unwrap();
    let expect = gauss_solve(&c.g().transpose(), &v0);
    for (a, b) in mean.iter().zip(&expect) {
        assert!((a - b).abs() < 1e-10 * norm2(&expect));
    }
}

#[test]
fn conditional_mean_minimizes_energy_on_constraint_plane() {
    // m = 3, n = 1: brute-force minimise u^T A u over the 2-parameter plane.
    let (sys, c, v0) = random_case(3, 1, 23);
    let g = c.g().column(0);
    let gg = g.iter().map(|x| x * x).sum::<f64>();
    let base: Vec<f64> = g.iter().map(|x| x * v0[0] / gg).collect();
    // Orthonormal basis of g-perp by Gram-Schmidt on unit vectors.
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for k in 0..3 {
        let mut e = vec![0.0; 3];
        e[k] = 1.0;
        let mut w: Vec<f64> = e.clone();
        for b in std::iter::once(&g).chain(basis.iter()) {
            let bb: f64 = b.iter().map(|x| x * x).sum();
            let proj: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / bb;
            w.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
        }
        if norm2(&w) > 1e-6 && basis.len() < 2 {
            let nw = norm2(&w);
            basis.push(w.iter().map(|x| x / nw).collect());
        }
    }
    let energy = |z: [f64; 2]| {
        let u: Vec<f64> = (0..3)
            .map(|i| base[i] + z[0] * basis[0][i] + z[1] * basis[1][i])
            .collect();
        sys.measure_matrix().quadratic_form(&u)
    };
    let mut best = [0.0, 0.0];
    let mut step = 4.0;
    while step > 1e-12 {
        let mut improved = true;
        while improved {
            improved = false;
            for d in [[step, 0.0], [-step, 0.0], [0.0, step], [0.0, -step]] {
                let cand = [best[0] + d[0], best[1] + d[1]];
                if energy(cand) < energy(best) {
                    best = cand;
                    improved = true;
                }
            }
        }
        step *= 0.5;
    }
    let brute: Vec<f64> = (0..3)
        .map(|i| base[i] + best[0] * basis[0][i] + best[1] * basis[1][i])
        .collect();
    let mean = conditional_mean(&sys, &c, &v0).unwrap();
    for (a, b) in mean.iter().zip(&brute) {
        assert!((a - b).abs() < 1e-6, "{mean:?} vs {brute:?}");
    }
}

#[test]
fn exact_mean_examples() {
    let (sys, c, v0) = random_case(6, 2, 4);
    assert_eq!(
        exact_mean(&sys, &c, &v0, 0.0).unwrap(),
        conditional_mean(&sys, &c, &v0).unwrap()
    );
    assert_eq!(
        exact_mean(&sys, &c, &[0.0, 0.0], 3.0).unwrap(),
        vec![0.0; 6]
    );

    let (sys, c) = rotation_system();
    for &t in &[0.0, 0.4, 2.0, 9.0] {
        let u = exact_mean(&sys, &c, &[1.0], t).unwrap();
        assert!((u[0] - t.cos()).abs() < 1e-12 && (u[1] + t.sin()).abs() < 1e-12);
    }
}

#[test]
fn reduced_rhs_single_constraint_is_zero() {
    let (_, c, _) = random_case(5, 1, 8);
    assert_eq!(reduced_rhs(&c)[(0, 0)], 0.0);
    let (_, c) = rotation_system();
    assert_eq!(reduced_rhs(&c)[(0, 0)], 0.0);
}

#[test]
fn reduced_rhs_matches_direct_product() {
    let (sys, c, _) = random_case(4, 2, 31);
    let g = c.g();
    let k = sys
        .generator()
        .matmul(&gauss_inverse(sys.measure_matrix().as_dense()));
    let gkg = g.transpose().matmul(&k).matmul(g);
    let m = g
        .transpose()
        .matmul(&gauss_inverse(sys.measure_matrix().as_dense()))
        .matmul(g);
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let m_inv = DenseMatrix::from_rows(&[
        [m[(1, 1)] / det, -m[(0, 1)] / det],
        [-m[(1, 0)] / det, m[(0, 0)] / det],
    ]);
    let oracle = gkg.matmul(&m_inv);
    let got = reduced_rhs(&c);
    assert!(got.sub(&oracle).max_abs() < 1e-10 * oracle.max_abs().max(1.0));
}

#[test]
fn approx_mean_examples() {
    let (sys, c, v0) = random_case(4, 2, 5);
    assert_eq!(
        approx_mean(&sys, &c, &v0, 0.0).unwrap(),
        exact_mean(&sys, &c, &v0, 0.0).unwrap()
    );
    let r = predict(&sys, &c, &v0, 1.0).unwrap();
    assert!(r.error_a_norm <= r.lemma1_bound + 1e-9);
}

#[test]
fn invariant_subspace_makes_reduction_exact() {
    for seed in 0..5 {
        let sys = random_invariant_system(6, 100 + seed).unwrap();
        let g = invariant_constraints(&sys);
        let c = ConstraintSet::new(&sys, g).unwrap();
        let e = defect_matrix(&sys, &c).unwrap();
        assert!(e.max_abs() < 1e-10 * spectral_norm(sys.generator()) * spectral_norm(c.g()));
        let v0 = [0.8, -0.3];
        let mut worst: f64 = 0.0;
        for i in 0..=20 {
            let t = 0.5 * i as f64;
            let r = predict(&sys, &c, &v0, t).unwrap();
            worst = worst.max(r.error_a_norm);
        }
        assert!(worst <= 1e-9, "seed {seed}: {worst}");
    }
}

#[test]
fn defect_matrix_matches_termwise_formula() {
    let (sys, c, _) = random_case(6, 2, 12);
    let g = c.g();
    let a_inv = gauss_inverse(sys.measure_matrix().as_dense());
    let k = sys.generator().matmul(&a_inv);
    let m = g.transpose().matmul(&a_inv).matmul(g);
    let oracle = sys.generator().transpose().matmul(g).add(
        &g.matmul(&gauss_inverse(&m))
            .matmul(&g.transpose())
            .matmul(&k)
            .matmul(g),
    );
    let got = defect_matrix(&sys, &c).unwrap();
    assert!(got.sub(&oracle).max_abs() < 1e-9 * oracle.max_abs());
}

#[test]
fn lemma1_bound_trivial_cases() {
    let (sys, c, v0) = random_case(5, 2, 3);
    assert_eq!(lemma1_bound(&sys, &c, &v0, 0.0).unwrap(), 0.0);
    assert!(lemma1_bound(&sys, &c, &v0, -1.0).is_err());
    let g = invariant_constraints(&sys);
    let c = ConstraintSet::new(&sys, g).unwrap();
    assert!(lemma1_bound(&sys, &c, &v0, 4.0).unwrap() < 1e-9);
}

#[test]
fn error_integral_examples() {
    let (sys, c, v0) = random_case(4, 2, 77);
    assert_eq!(
        error_integral(&sys, &c, &v0, 0.0, 1e-10).unwrap(),
        vec![0.0; 4]
    );
    assert_eq!(
        error_integral(&sys, &c, &[0.0, 0.0], 2.0, 1e-10).unwrap(),
        vec![0.0; 4]
    );

    for &t in &[0.5, 1.0, 3.0] {
        let e = error_integral(&sys, &c, &v0, t, 1e-11).unwrap();
        let direct = sub_vec(
            &approx_mean(&sys, &c, &v0, t).unwrap(),
            &exact_mean(&sys, &c, &v0, t).unwrap(),
        );
        for (a, b) in e.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-8, "t = {t}: {a} vs {b}");
        }
    }

    let sys = random_invariant_system(6, 9).unwrap();
    let c = ConstraintSet::new(&sys, invariant_constraints(&sys)).unwrap();
    let e = error_integral(&sys, &c, &[1.0, 1.0], 2.0, 1e-11).unwrap();
    assert!(norm2(&e) < 1e-9);
}

#[test]
fn random_system_properties() {
    let sys = random_invariant_system(6, 2024).unwrap();
    let a = sys.measure_matrix().as_dense();
    let l = sys.generator();
    let lta = l.tr_matmul(a);
    let res = spectral_norm(&lta.add(&lta.transpose()));
    assert!(res <= 1e-12 * spectral_norm(a) * spectral_norm(l));

    let again = random_invariant_system(6, 2024).unwrap();
    assert_eq!(again.generator(), sys.generator());
    assert_eq!(again.measure_matrix(), sys.measure_matrix());

    // The root finder itself sees real parts.
    let mut real = eigenvalues_small(&DenseMatrix::from_rows(&[[1.0, 5.0], [0.0, 2.0]]));
    real.sort_by(|a, b| a.0.total_cmp(&b.0));
    assert!((real[0].0 - 1.0).abs() < 1e-10 && (real[1].0 - 2.0).abs() < 1e-10);

    for (m, seed) in [(4, 1u64), (5, 2), (6, 3)] {
        let sys = random_invariant_system(m, seed).unwrap();
        let scale = spectral_norm(sys.generator());
        for (re, im) in eigenvalues_small(sys.generator()) {
            assert!(re.abs() <= 1e-8 * scale, "eigenvalue {re} + {im}i");
        }
    }
    assert!(matches!(
        random_invariant_system(1, 0),
        Err(Error::InvalidParams(_))
    ));
}

#[test]
fn constructor_rejections() {
    let l = DenseMatrix::from_rows(&[[0.0, 1.0], [0.0, 0.0]]);
    assert!(matches!(
        LinearSystem::new(l, SpdMatrix::identity(2)),
        Err(Error::InvarianceViolated { .. })
    ));
    let sys = random_invariant_system(4, 0).unwrap();
    let g = DenseMatrix::from_fn(4, 2, |i, _| i as f64);
    assert!(matches!(
        ConstraintSet::new(&sys, g),
        Err(Error::RankDeficient { .. })
    ));
    assert!(matches!(
        ConstraintSet::new(&sys, DenseMatrix::zeros(3, 1)),
        Err(Error::DimensionMismatch { .. })
    ));
    assert!(matches!(
        ConstraintSet::new(&sys, random_constraints(4, 5, 1)),
        Err(Error::TooManyConstraints { .. })
    ));
    let (sys, c, _) = random_case(4, 2, 0);
    assert!(conditional_mean(&sys, &c, &[1.0]).is_err());
}

#[test]
fn energy_is_half_squared_a_norm() {
    let sys = random_invariant_system(5, 6).unwrap();
    let u = RngStream::new(6, 9).normals().vector(5);
    let e = sys.energy(&u);
    let n = sys.a_norm(&u);
    assert!((2.0 * e - n * n).abs() < 1e-12 * e);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prop_scaled_propagator_is_orthogonal(seed in any::<u64>(), t in 0.0f64..10.0) {
        let sys = random_invariant_system(5, seed).unwrap();
        let s = expm(sys.generator(), t).unwrap();
        let w = sys.a_sqrt().as_dense().matmul(&s).matmul(sys.a_inv_sqrt().as_dense());
        let defect = spectral_norm(&w.tr_matmul(&w).sub(&DenseMatrix::identity(5)));
        prop_assert!(defect <= 1e-9, "defect {}", defect);
    }

    #[test]
    fn prop_reduced_energy_conserved(seed in any::<u64>(), t in 0.0f64..10.0) {
        let (_, c, v0) = random_case(6, 3, seed);
        let v = reduced_trajectory(&c, &v0, t).unwrap();
        let e0 = c.reduced_energy(&v0);
        prop_assert!((c.reduced_energy(&v) - e0).abs() <= 1e-9 * e0);
    }

    #[test]
    fn prop_lemma1_holds(seed in any::<u64>(), m in 3usize..10, t in 0.0f64..6.0) {
        let n = 1 + (seed as usize) % (m / 2).max(1);
        let (sys, c, v0) = random_case(m, n, seed);
        let r = predict(&sys, &c, &v0, t).unwrap();
        prop_assert!(r.error_a_norm <= r.lemma1_bound + 1e-9);
    }

    #[test]
    fn prop_constraint_reproduction(seed in any::<u64>()) {
        let (sys, c, v0) = random_case(7, 3, seed);
        let u = conditional_mean(&sys, &c, &v0).unwrap();
        let back = c.g().tr_matvec(&u);
        prop_assert!(norm2(&sub_vec(&back, &v0)) <= 1e-10 * norm2(&v0));
    }
}
