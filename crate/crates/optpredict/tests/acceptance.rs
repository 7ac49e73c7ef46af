//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails or runs over its time budget.

use std::num::NonZeroUsize;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use optpredict::executor::ThreadExecutor;
use optpredict_core::klein_gordon::{lemma2_bound, KgParams, KgSpectralSystem, KgState};
use optpredict_core::linalg::{expm, norm2, spectral_norm, sub_vec};
use optpredict_core::prediction::{
    approx_mean, error_integral, exact_mean, predict, random_constraints, random_invariant_system,
    reduced_trajectory, ConstraintSet, LinearSystem,
};
use optpredict_core::stochastic::{
    analytic_var_q, trace_identity, verify_constraint_energy, verify_covariance, verify_theorem1,
    verify_theorem2, GaussianMeasure, RngStream, Theorem2Config, Verdict,
};
use optpredict_core::DenseMatrix;

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, u64, Box<dyn Fn() -> Outcome + 'a>);

fn kg(n: usize, r: usize, sigma: f64) -> KgSpectralSystem {
    KgSpectralSystem::build(KgParams::new(n, r, sigma).unwrap()).unwrap()
}

fn sigma_for_weight(n: usize, weight: f64) -> f64 {
    (weight / (2 * n + 1) as f64).sqrt()
}

fn boundary_sigma(n: usize, nu: f64) -> f64 {
    let points = (2 * n + 1) as f64;
    (6.0 * (nu + 1.0) * points.ln() / points).sqrt()
}

/// Constraint values of a prior draw. Arbitrary data would make the lift
/// blow up for wide kernels and swamp the checks in roundoff.
fn kg_data(sys: &KgSpectralSystem, seed: u64) -> Vec<f64> {
    let state = GaussianMeasure::new(sys).sample_prior(RngStream::new(seed, 0));
    sys.constraint_values(&state).unwrap()
}

fn kg_error(sys: &KgSpectralSystem, v0: &[f64], t: f64) -> f64 {
    let e = sys.exact_mean(v0, t).unwrap();
    let a = sys.approx_mean(v0, t).unwrap();
    sys.a_norm(&a.difference(&e).unwrap())
}

/// Random invariant system with `1 <= n <= m/2`, deterministic in `seed`.
fn random_case(seed: u64, max_m: usize) -> (LinearSystem, ConstraintSet, Vec<f64>) {
    let m = 2 + (seed as usize * 7) % (max_m - 1);
    let n = 1 + (seed as usize * 3) % (m / 2);
    let sys = random_invariant_system(m, seed).unwrap();
    let c = ConstraintSet::new(&sys, random_constraints(m, n, seed)).unwrap();
    let v0 = RngStream::new(seed, 1).normals().vector(n);
    (sys, c, v0)
}

fn executor() -> ThreadExecutor {
    let threads = std::thread::available_parallelism().map_or(1, NonZeroUsize::get);
    ThreadExecutor::new(NonZeroUsize::new(threads.min(8)).unwrap())
}

fn lemma2_grid() -> Outcome {
    let mut worst = f64::INFINITY;
    let mut checked = 0;
    for n in 1..=8 {
        for r in 1..=3 {
            for weight in [2.0, 4.0, 8.0, 16.0] {
                let params = KgParams::new(n, r, sigma_for_weight(n, weight)).unwrap();
                let bound = lemma2_bound(&params, true).unwrap();
                let exact = KgSpectralSystem::build(params).unwrap().exact_defect_norm();
                if exact > bound {
                    return Err(format!("n={n} r={r} weight={weight}: {exact} > {bound}"));
                }
                worst = worst.min(bound - exact);
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} instances, smallest margin {worst:.3e}"))
}

fn zero_excess_exact() -> Outcome {
    let mut worst = 0.0f64;
    for n in 1..=6 {
        let sys = kg(n, 0, boundary_sigma(n, 0.0));
        let v0 = kg_data(&sys, n as u64);
        for step in 0..=20 {
            worst = worst.max(kg_error(&sys, &v0, 0.5 * step as f64));
        }
    }
    if worst <= 1e-9 {
        Ok(format!("max error {worst:.3e}"))
    } else {
        Err(format!("max error {worst:.3e} > 1e-9"))
    }
}

fn lemma1_inequality() -> Outcome {
    let times = [0.1, 1.0, 5.0];
    let mut checked = 0;
    for seed in 0..200u64 {
        let (sys, c, v0) = random_case(seed, 20);
        for &t in &times {
            let r = predict(&sys, &c, &v0, t).map_err(|e| e.to_string())?;
            if r.error_a_norm > r.lemma1_bound + 1e-9 {
                return Err(format!(
                    "seed {seed}, t={t}: {} > {}",
                    r.error_a_norm, r.lemma1_bound
                ));
            }
            checked += 1;
        }
    }
    for n in 1..=4 {
        for r in 0..=3 {
            let sys = kg(n, r, boundary_sigma(n, 0.5));
            let v0 = kg_data(&sys, (10 * n + r) as u64);
            for &t in &times {
                let err = kg_error(&sys, &v0, t);
                let bound = sys.lemma1_bound(&v0, t).unwrap();
                if err > bound + 1e-9 {
                    return Err(format!("KG n={n} r={r} t={t}: {err} > {bound}"));
                }
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} (system, t) pairs"))
}

fn error_integral_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    for seed in 0..50u64 {
        let (sys, c, v0) = random_case(1000 + seed, 12);
        let t = 0.25 + (seed % 8) as f64 * 0.6;
        let integral = error_integral(&sys, &c, &v0, t, 1e-11).map_err(|e| e.to_string())?;
        let direct = sub_vec(
            &approx_mean(&sys, &c, &v0, t).unwrap(),
            &exact_mean(&sys, &c, &v0, t).unwrap(),
        );
        let diff = integral
            .iter()
            .zip(&direct)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(diff);
    }
    if worst <= 1e-8 {
        Ok(format!("50 cases, max difference {worst:.3e}"))
    } else {
        Err(format!("max difference {worst:.3e} > 1e-8"))
    }
}

fn conservation() -> Outcome {
    let mut ortho = 0.0f64;
    let mut drift = 0.0f64;
    for seed in 0..50u64 {
        let (sys, c, v0) = random_case(1000 + seed, 12);
        let m = sys.dim();
        let e0 = c.reduced_energy(&v0);
        for t in [0.0, 0.5, 2.5, 10.0] {
            let s = expm(sys.generator(), t).unwrap();
            let w = sys
                .a_sqrt()
                .as_dense()
                .matmul(&s)
                .matmul(sys.a_inv_sqrt().as_dense());
            ortho = ortho.max(spectral_norm(
                &w.tr_matmul(&w).sub(&DenseMatrix::identity(m)),
            ));
            let v = reduced_trajectory(&c, &v0, t).unwrap();
            drift = drift.max((c.reduced_energy(&v) - e0).abs() / e0);
        }
    }
    if ortho <= 1e-9 && drift <= 1e-9 {
        Ok(format!(
            "orthonormality defect {ortho:.3e}, energy drift {drift:.3e}"
        ))
    } else {
        Err(format!(
            "orthonormality defect {ortho:.3e}, energy drift {drift:.3e}"
        ))
    }
}

fn trace_identity_check(exec: &ThreadExecutor) -> Outcome {
    let mut worst = 0.0f64;
    let mut count = 0;
    for n in 1..=8 {
        for r in 0..=3 {
            let mut sigmas: Vec<f64> = [2.0, 4.0, 8.0, 16.0]
                .iter()
                .map(|&w| sigma_for_weight(n, w))
                .collect();
            sigmas.extend([boundary_sigma(n, 0.0), boundary_sigma(n, 0.5)]);
            for sigma in sigmas {
                let sys = kg(n, r, sigma);
                let target = 2.0 * (2 * n + 1) as f64;
                let trace = trace_identity(&sys).map_err(|e| e.to_string())?;
                worst = worst.max((trace - target).abs() / target);
                count += 1;
            }
        }
    }
    if worst > 1e-10 {
        return Err(format!("trace relative error {worst:.3e} > 1e-10"));
    }
    for (n, r) in [(1, 1), (2, 2), (4, 1)] {
        let sys = kg(n, r, boundary_sigma(n, 0.5));
        let report = verify_constraint_energy(&sys, 10_000, 7, exec).map_err(|e| e.to_string())?;
        if report.verdict != Verdict::Pass {
            let mc = report.find_estimate("mc_mean").unwrap();
            return Err(format!(
                "Monte Carlo n={n} r={r}: {} +- {}",
                mc.value, mc.stderr
            ));
        }
    }
    Ok(format!(
        "{count} grid instances, max relative error {worst:.3e}; Monte Carlo within 5 SE"
    ))
}

fn covariance(exec: &ThreadExecutor) -> Outcome {
    let sys = kg(2, 2, boundary_sigma(2, 0.5));
    let report = verify_covariance(&sys, 100_000, 5, exec).map_err(|e| e.to_string())?;
    let var_q = analytic_var_q(sys.params());
    let lower = 1.0 / (2.0 * std::f64::consts::PI);
    let upper = 0.5 / std::f64::consts::PI.tanh();
    if !(lower < var_q && var_q < upper) {
        return Err(format!("analytic var {var_q} outside ({lower}, {upper})"));
    }
    if report.verdict != Verdict::Pass {
        return Err(format!("covariance verdict {}", report.verdict.as_str()));
    }
    Ok(format!(
        "diagonal within 5 SE, var_q = {var_q:.6} in window"
    ))
}

fn theorem1(exec: &ThreadExecutor) -> Outcome {
    let nu = 0.5;
    let mut worst = 0.0f64;
    for n in [1, 2, 4] {
        let sys = kg(n, 1, boundary_sigma(n, nu));
        for t in [1.0, 5.0] {
            let report =
                verify_theorem1(&sys, nu, t, 10_000, 3, exec).map_err(|e| e.to_string())?;
            let exceed = report.find_estimate("exceedance").unwrap().value;
            let allowed = report.find_threshold("allowed_exceedance").unwrap();
            if report.verdict != Verdict::Pass || exceed > allowed {
                return Err(format!("n={n} t={t}: exceedance {exceed} vs {allowed}"));
            }
            worst = worst.max(exceed);
        }
    }
    Ok(format!("largest exceedance {worst}"))
}

fn theorem2(exec: &ThreadExecutor) -> Outcome {
    let mut lines = Vec::new();
    for n in [1, 2] {
        for r in [0, 1] {
            let cfg = Theorem2Config {
                n,
                sigma: boundary_sigma(n, 0.0),
                nu: 0.0,
                rs: vec![r],
                r_max: Some(r + 2),
                samples: 2000,
                seed: 13,
                check_time_invariance: false,
            };
            let report = verify_theorem2(&cfg, exec).map_err(|e| e.to_string())?;
            let prob = report
                .find_estimate(&format!("prob_within_eps_r{r}"))
                .unwrap();
            let eps = report.find_threshold(&format!("eps_r{r}")).unwrap();
            if prob.value < 1.0 - eps - 3.0 * prob.stderr {
                return Err(format!(
                    "n={n} r={r}: probability {} < 1 - {eps}",
                    prob.value
                ));
            }
            lines.push(format!("n={n} r={r} p={:.4}", prob.value));
        }
    }
    Ok(lines.join(", "))
}

fn cross_path() -> Outcome {
    let mut worst = 0.0f64;
    for case in 0..20u64 {
        let n = 1 + (case as usize % 3);
        let r = case as usize % 3;
        let sys = kg(n, r, boundary_sigma(n, 0.5));
        let (lin, c) = sys.assemble().map_err(|e| e.to_string())?;
        let v0 = kg_data(&sys, 500 + case);
        let t = 0.37 * case as f64;
        let pairs = [
            (
                sys.exact_mean(&v0, t).unwrap(),
                exact_mean(&lin, &c, &v0, t).unwrap(),
            ),
            (
                sys.approx_mean(&v0, t).unwrap(),
                approx_mean(&lin, &c, &v0, t).unwrap(),
            ),
        ];
        for (fast, generic) in pairs {
            let diff = norm2(&sub_vec(&KgState::to_stacked(&fast), &generic));
            worst = worst.max(diff / norm2(&generic).max(1.0));
        }
    }
    if worst <= 1e-9 {
        Ok(format!("20 cases, max difference {worst:.3e}"))
    } else {
        Err(format!("max difference {worst:.3e} > 1e-9"))
    }
}

fn run_cli(args: &[&str], threads: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_optpredict"))
        .args(args)
        .env("OPTPREDICT_THREADS", threads)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.code() != Some(0) {
        return Err(format!("{args:?} exited with {:?}", out.status.code()));
    }
    Ok(out.stdout)
}

fn determinism() -> Outcome {
    let runs: [&[&str]; 3] = [
        &[
            "theorem1",
            "--n",
            "2",
            "--samples",
            "3000",
            "--seed",
            "9",
            "--format",
            "json",
        ],
        &[
            "identities",
            "--n",
            "2",
            "--r",
            "2",
            "--samples",
            "3000",
            "--seed",
            "9",
        ],
        &[
            "theorem2",
            "--n",
            "1",
            "--nu",
            "0",
            "--r",
            "0,1",
            "--samples",
            "500",
            "--seed",
            "9",
        ],
    ];
    for args in runs {
        let one = run_cli(args, "1")?;
        for threads in ["3", "4"] {
            if run_cli(args, threads)? != one {
                return Err(format!("{} differs with {threads} threads", args[0]));
            }
        }
    }
    let sys = kg(2, 1, boundary_sigma(2, 0.5));
    let single = ThreadExecutor::new(NonZeroUsize::MIN);
    let many = ThreadExecutor::new(NonZeroUsize::new(4).unwrap());
    let a = verify_theorem1(&sys, 0.5, 1.0, 1000, 1, &single).unwrap();
    let b = verify_theorem1(&sys, 0.5, 1.0, 1000, 1, &many).unwrap();
    if serde_json::to_string(&a).unwrap() != serde_json::to_string(&b).unwrap() {
        return Err("library reports differ across executors".into());
    }
    Ok("byte-identical reports for 1, 3 and 4 threads".into())
}

fn main() -> ExitCode {
    let exec = executor();
    let criteria: Vec<Criterion> = vec![
        ("defect norm within Lemma 2 bound", 1, Box::new(lemma2_grid)),
        (
            "zero excess resolution is exact",
            5,
            Box::new(zero_excess_exact),
        ),
        ("Lemma 1 inequality", 10, Box::new(lemma1_inequality)),
        (
            "error integral equals difference",
            10,
            Box::new(error_integral_equivalence),
        ),
        (
            "orthonormality and reduced energy",
            5,
            Box::new(conservation),
        ),
        (
            "trace identity",
            10,
            Box::new(|| trace_identity_check(&exec)),
        ),
        (
            "covariance and variance window",
            20,
            Box::new(|| covariance(&exec)),
        ),
        ("Theorem 1 exceedance", 30, Box::new(|| theorem1(&exec))),
        ("Theorem 2 convergence", 30, Box::new(|| theorem2(&exec))),
        ("closed form matches generic path", 5, Box::new(cross_path)),
        (
            "determinism across thread counts",
            60,
            Box::new(determinism),
        ),
    ];

    let mut failures = 0;
    for (k, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let over = elapsed > Duration::from_secs(*budget);
        let secs = elapsed.as_secs_f64();
        match result {
            Ok(detail) if !over => {
                println!("PASS criterion {}: {name}: {detail} ({secs:.2} s)", k + 1);
            }
            Ok(detail) => {
                failures += 1;
                println!(
                    "FAIL criterion {}: {name}: {detail}; took {secs:.2} s, limit {budget} s",
                    k + 1
                );
            }
            Err(why) => {
                failures += 1;
                println!("FAIL criterion {}: {name}: {why} ({secs:.2} s)", k + 1);
            }
        }
    }
    if failures == 0 {
        println!("all {} criteria passed", criteria.len());
        ExitCode::SUCCESS
    } else {
        println!("{failures} criteria failed");
        ExitCode::FAILURE
    }
}
