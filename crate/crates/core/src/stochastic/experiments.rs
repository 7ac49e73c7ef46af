//! Monte Carlo and deterministic checks of the statements about the
//! Klein-Gordon instance.
//!
//! Sample `i` always draws from `RngStream::new(seed, i)`, and every
//! reduction runs over index-ordered results, so a report depends only on
//! its inputs and never on how an executor schedules the work.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::exec::{pairwise_sum, MeanEstimate, SampleExecutor};
use super::measure::GaussianMeasure;
use super::report::{ExperimentReport, Verdict};
use super::RngStream;
use crate::error::{Error, Result};
use crate::klein_gordon::{
    embed, restrict, theorem2_epsilon, wavenumber, KgParams, KgSpectralSystem, KgState,
};
use crate::linalg::{DenseMatrix, SpdMatrix};

/// Monte Carlo verdicts with fewer samples than this are `Inconclusive`.
pub const MIN_SAMPLES: usize = 100;

/// Times at which the optional invariance check re-evaluates a difference.
const INVARIANCE_TIMES: [f64; 3] = [0.37, 2.9, 11.3];

fn record_params(report: &mut ExperimentReport, p: &KgParams) {
    report
        .param("n", p.n())
        .param("r", p.r())
        .param("sigma", p.sigma())
        .param("m", p.m());
}

fn check_samples(n_samples: usize) -> Result<()> {
    if n_samples == 0 {
        return Err(Error::InvalidParams("sample count must be at least 1"));
    }
    Ok(())
}

fn check_nu(nu: f64) -> Result<()> {
    if !(nu >= 0.0) || !nu.is_finite() {
        return Err(Error::InvalidParams("nu must be finite and nonnegative"));
    }
    Ok(())
}

fn collect<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

/// `G^T Lambda^-2 G` and `G^T G` assembled densely.
fn dense_grams(sys: &KgSpectralSystem) -> Result<(SpdMatrix, SpdMatrix)> {
    let g = sys.gt().transpose();
    let inv_lsq: Vec<f64> = sys.lambda().iter().map(|w| 1.0 / (w * w)).collect();
    let q = SpdMatrix::new(g.tr_matmul(&g.scale_rows(&inv_lsq)))?;
    let p = SpdMatrix::new(g.tr_matmul(&g))?;
    Ok((q, p))
}

/// `E(v0^T M^-1 v0)` as the trace of the two projectors
/// `Lambda^-1 G (G^T Lambda^-2 G)^-1 G^T Lambda^-1` and `G (G^T G)^-1 G^T`.
///
/// `G` enters densely and the inverses through the spectral factorisation,
/// `sum_k |B q_k|^2 / d_k` with `B = Lambda^-1 G` or `G`. A dense solve
/// would lose all accuracy once the Gram matrices reach condition numbers
/// near `1 / eps`, which happens well inside the parameter range of interest.
pub fn trace_identity(sys: &KgSpectralSystem) -> Result<f64> {
    let points = sys.params().num_points();
    let q = sys.q_matrix();
    let mut total = 0.0;
    for k in 0..points {
        let d1 = sys.d1()[k];
        let d3 = sys.d3()[k];
        if !(d1 > 0.0 && d3 > 0.0) {
            return Err(Error::SingularM);
        }
        let gq = sys.gt().tr_matvec(&q.column(k));
        let plain: f64 = gq.iter().map(|x| x * x).sum();
        let scaled: f64 = gq
            .iter()
            .zip(sys.lambda())
            .map(|(x, w)| (x / w) * (x / w))
            .sum();
        total += scaled / d3 + plain / d1;
    }
    Ok(total)
}

/// `(1/2pi) sum_{|l| <= m} exp(-l^2 sigma^2 / 2) w(l)`, summed from the tails in.
fn aliased_variance(p: &KgParams, weight: impl Fn(f64) -> f64) -> f64 {
    let s2 = p.sigma() * p.sigma();
    let mut total = 0.0;
    for l in (1..=p.m()).rev() {
        let l2 = (l * l) as f64;
        total += 2.0 * libm::exp(-l2 * s2 / 2.0) * weight(l2);
    }
    (total + weight(0.0)) / (2.0 * PI)
}

/// Analytic `var(v_{q,a})`, the same for every grid point.
pub fn analytic_var_q(p: &KgParams) -> f64 {
    aliased_variance(p, |l2| 1.0 / (l2 + 1.0))
}

/// Analytic `var(v_{p,a})`.
pub fn analytic_var_p(p: &KgParams) -> f64 {
    aliased_variance(p, |_| 1.0)
}

/// Probabilistic error bound: `|approx - exact|_A <= 2.3 t / (2n+1)^nu`
/// should fail with probability at most `(2n+1)^-nu` over prior draws.
pub fn verify_theorem1<E: SampleExecutor>(
    sys: &KgSpectralSystem,
    nu: f64,
    t: f64,
    n_samples: usize,
    seed: u64,
    exec: &E,
) -> Result<ExperimentReport> {
    check_nu(nu)?;
    check_samples(n_samples)?;
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidParams("t must be finite and nonnegative"));
    }
    let params = sys.params();
    let points = params.num_points() as f64;
    let hypothesis_ok = nu > 0.0 && params.theorem_hypothesis(nu);
    let measure = GaussianMeasure::new(sys);

    let samples = collect(exec.map_indexed(n_samples, |i| {
        let state = measure.sample_prior(RngStream::new(seed, i as u64));
        let v0 = sys.constraint_values(&state)?;
        let exact = sys.exact_mean(&v0, t)?;
        let approx = sys.approx_mean(&v0, t)?;
        let err = sys.a_norm(&approx.difference(&exact)?);
        Ok((err, sys.lemma1_bound(&v0, t)?))
    }))?;
    let errors: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let bounds: Vec<f64> = samples.iter().map(|s| s.1).collect();

    let threshold = 2.3 * t / libm::pow(points, nu);
    let allowed = libm::pow(points, -nu);
    let exceed =
        MeanEstimate::proportion(errors.iter().filter(|&&e| e > threshold).count(), n_samples);
    let mean_err = MeanEstimate::from_samples(&errors);
    let mean_bound = MeanEstimate::from_samples(&bounds);
    let max_err = errors.iter().copied().fold(0.0, f64::max);

    let mut report = ExperimentReport::new("theorem1", seed);
    record_params(&mut report, params);
    report
        .param("nu", nu)
        .param("t", t)
        .param("samples", n_samples)
        .param("hypothesis_ok", hypothesis_ok)
        .estimate("exceedance", exceed.mean, exceed.stderr)
        .estimate("mean_error", mean_err.mean, mean_err.stderr)
        .estimate("max_error", max_err, 0.0)
        .estimate("mean_lemma1_bound", mean_bound.mean, mean_bound.stderr)
        .estimate("defect_norm", sys.exact_defect_norm(), 0.0)
        .threshold("error_threshold", threshold)
        .threshold("allowed_exceedance", allowed)
        .threshold("probability_bound", 1.0 - allowed);
    report.verdict = if n_samples < MIN_SAMPLES || !hypothesis_ok {
        Verdict::Inconclusive
    } else if exceed.mean <= allowed + 3.0 * exceed.stderr {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(report)
}

/// `E(v0^T M^-1 v0) = 2(2n+1)`, by traces and by Monte Carlo.
pub fn verify_constraint_energy<E: SampleExecutor>(
    sys: &KgSpectralSystem,
    n_samples: usize,
    seed: u64,
    exec: &E,
) -> Result<ExperimentReport> {
    check_samples(n_samples)?;
    let params = sys.params();
    let target = 2.0 * params.num_points() as f64;
    let trace = trace_identity(sys)?;
    let measure = GaussianMeasure::new(sys);
    let energies = collect(exec.map_indexed(n_samples, |i| {
        let state = measure.sample_prior(RngStream::new(seed, i as u64));
        sys.reduced_energy(&sys.constraint_values(&state)?)
    }))?;
    let mc = MeanEstimate::from_samples(&energies);

    let mut report = ExperimentReport::new("constraint_energy", seed);
    record_params(&mut report, params);
    report
        .param("samples", n_samples)
        .estimate("trace_identity", trace, 0.0)
        .estimate("mc_mean", mc.mean, mc.stderr)
        .threshold("target", target)
        .threshold("trace_tolerance", 1e-10 * target)
        .threshold("mc_tolerance", 5.0 * mc.stderr);
    report.verdict = if (trace - target).abs() > 1e-10 * target {
        Verdict::Fail
    } else if n_samples < MIN_SAMPLES {
        Verdict::Inconclusive
    } else if (mc.mean - target).abs() <= 5.0 * mc.stderr {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(report)
}

/// `E(v0 v0^T) = M` and the window `1/(2pi) < var(v_q) < coth(pi)/2`.
pub fn verify_covariance<E: SampleExecutor>(
    sys: &KgSpectralSystem,
    n_samples: usize,
    seed: u64,
    exec: &E,
) -> Result<ExperimentReport> {
    check_samples(n_samples)?;
    let params = sys.params();
    let points = params.num_points();
    let dim = 2 * points;
    let measure = GaussianMeasure::new(sys);
    let samples = collect(exec.map_indexed(n_samples, |i| {
        sys.constraint_values(&measure.sample_prior(RngStream::new(seed, i as u64)))
    }))?;

    let (mq, mp) = dense_grams(sys)?;
    let m = DenseMatrix::block_diag(mq.as_dense(), mp.as_dense());
    let mut moment = DenseMatrix::zeros(dim, dim);
    let mut diag = Vec::with_capacity(dim);
    let mut column = Vec::with_capacity(n_samples);
    for i in 0..dim {
        for j in i..dim {
            column.clear();
            column.extend(samples.iter().map(|v| v[i] * v[j]));
            let value = pairwise_sum(&column) / n_samples as f64;
            moment[(i, j)] = value;
            moment[(j, i)] = value;
            if i == j {
                diag.push(MeanEstimate::from_samples(&column));
            }
        }
    }
    let deviation = moment.sub(&m).frobenius_norm() / m.frobenius_norm();
    let envelope = 7.0 / libm::sqrt(n_samples as f64) * dim as f64;

    let var_q = analytic_var_q(params);
    let var_p = analytic_var_p(params);
    let lower = 1.0 / (2.0 * PI);
    let upper = 0.5 / libm::tanh(PI);
    let analytic_ok = lower < var_q
        && var_q < upper
        && (0..points).all(|a| {
            (m[(a, a)] - var_q).abs() <= 1e-12 * var_q
                && (m[(points + a, points + a)] - var_p).abs() <= 1e-12 * var_p
        });
    let diag_ok = diag
        .iter()
        .enumerate()
        .all(|(i, e)| (e.mean - m[(i, i)]).abs() <= 5.0 * e.stderr);

    let mut report = ExperimentReport::new("covariance", seed);
    record_params(&mut report, params);
    report.param("samples", n_samples);
    for (i, e) in diag.iter().enumerate() {
        let (block, a) = if i < points {
            ("q", i)
        } else {
            ("p", i - points)
        };
        report.estimate(&format!("second_moment_v{block}_{a}"), e.mean, e.stderr);
    }
    report
        .estimate("relative_frobenius_deviation", deviation, 0.0)
        .estimate("analytic_var_q", var_q, 0.0)
        .estimate("analytic_var_p", var_p, 0.0)
        .threshold("frobenius_envelope", envelope)
        .threshold("var_q_lower", lower)
        .threshold("var_q_upper", upper);
    report.verdict = if !analytic_ok {
        Verdict::Fail
    } else if n_samples < MIN_SAMPLES {
        Verdict::Inconclusive
    } else if diag_ok && deviation <= envelope {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(report)
}

/// Inputs of [`verify_theorem2`].
#[derive(Debug, Clone, PartialEq)]
pub struct Theorem2Config {
    pub n: usize,
    pub sigma: f64,
    pub nu: f64,
    /// Resolutions to test.
    pub rs: Vec<usize>,
    /// Reference resolution standing in for the limit. `None` uses `r + 2`
    /// for each tested `r`.
    pub r_max: Option<usize>,
    pub samples: usize,
    pub seed: u64,
    /// Also confirm that `|psi_r - psi_rmax|_A` is the same at later times.
    pub check_time_invariance: bool,
}

/// Convergence in resolution: `|psi_r - psi_rmax|_A < eps_r` with
/// probability at least `1 - eps_r`, read separately for each `r`.
pub fn verify_theorem2<E: SampleExecutor>(
    cfg: &Theorem2Config,
    exec: &E,
) -> Result<ExperimentReport> {
    check_nu(cfg.nu)?;
    check_samples(cfg.samples)?;
    if cfg.rs.is_empty() {
        return Err(Error::InvalidParams("at least one r is required"));
    }
    let base = KgParams::new(cfg.n, 0, cfg.sigma)?;
    let hypothesis_ok = base.theorem_hypothesis(cfg.nu);

    let mut report = ExperimentReport::new("theorem2", cfg.seed);
    let r_maxes: Vec<usize> = cfg.rs.iter().map(|&r| cfg.r_max.unwrap_or(r + 2)).collect();
    report
        .param("n", cfg.n)
        .param("sigma", cfg.sigma)
        .param("nu", cfg.nu)
        .param("r", cfg.rs.as_slice())
        .param("r_max", r_maxes.as_slice())
        .param("samples", cfg.samples)
        .param("hypothesis_ok", hypothesis_ok);

    let mut all_ok = true;
    let mut worst_invariance: f64 = 0.0;
    for (&r, &r_max) in cfg.rs.iter().zip(&r_maxes) {
        if r > r_max {
            return Err(Error::InvalidParams("r must not exceed r_max"));
        }
        let small = KgSpectralSystem::build(base.with_r(r))?;
        let large = KgSpectralSystem::build(base.with_r(r_max))?;
        let measure = GaussianMeasure::new(&large);
        let samples = collect(exec.map_indexed(cfg.samples, |i| {
            let state = measure.sample_prior(RngStream::new(cfg.seed, i as u64));
            let coarse = restrict(&state, cfg.n, r_max, r)?;
            let psi_r = small.exact_mean(&small.constraint_values(&coarse)?, 0.0)?;
            let psi_max = large.exact_mean(&large.constraint_values(&state)?, 0.0)?;
            let diff = embed(&psi_r, cfg.n, r, r_max)?.difference(&psi_max)?;
            let norm = large.a_norm(&diff);
            let mut residual: f64 = 0.0;
            if cfg.check_time_invariance {
                for t in INVARIANCE_TIMES {
                    let later = large.a_norm(&large.propagate(&diff, t)?);
                    residual = residual.max((later - norm).abs() / norm.max(f64::MIN_POSITIVE));
                }
            }
            Ok((norm, residual))
        }))?;
        let mut norms: Vec<f64> = samples.iter().map(|s| s.0).collect();
        worst_invariance = samples.iter().map(|s| s.1).fold(worst_invariance, f64::max);

        let eps = theorem2_epsilon(cfg.n, cfg.nu, r);
        let prob =
            MeanEstimate::proportion(norms.iter().filter(|&&d| d < eps).count(), cfg.samples);
        norms.sort_by(f64::total_cmp);
        let median = norms[norms.len() / 2];
        let max = norms[norms.len() - 1];
        all_ok &= prob.mean >= 1.0 - eps - 3.0 * prob.stderr;

        report
            .estimate(&format!("prob_within_eps_r{r}"), prob.mean, prob.stderr)
            .estimate(&format!("median_diff_r{r}"), median, 0.0)
            .estimate(&format!("max_diff_r{r}"), max, 0.0)
            .threshold(&format!("eps_r{r}"), eps)
            .threshold(&format!("required_prob_r{r}"), 1.0 - eps);
    }
    let invariance_ok = worst_invariance <= 1e-10;
    if cfg.check_time_invariance {
        report
            .estimate("time_invariance_residual", worst_invariance, 0.0)
            .threshold("time_invariance_tolerance", 1e-10);
    }
    report.verdict = if !invariance_ok {
        Verdict::Fail
    } else if cfg.samples < MIN_SAMPLES || !hypothesis_ok {
        Verdict::Inconclusive
    } else if all_ok {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(report)
}

/// A smooth profile: every coefficient of `u` and `u_t` at wavenumber `k`
/// equals `(1 + k^2)^-decay`.
pub fn smooth_profile(params: &KgParams, decay: f64) -> KgState {
    let m = params.m();
    let q: Vec<f64> = (0..params.modes())
        .map(|i| {
            let k = wavenumber(m, i) as f64;
            libm::pow(1.0 + k * k, -decay)
        })
        .collect();
    KgState { p: q.clone(), q }
}

/// Error of the exact mean when the data come from a known smooth solution,
/// next to the two terms of the claimed bound
/// `3 sqrt(2.5) (2n+1)^{-1.5(nu+1)} |u0|_A + (n+1)^-s |d^s (I - P_n) u0|_A`.
///
/// The constants are reported, not asserted. The verdict only checks that
/// the error is finite and the mean reproduces the data.
pub fn smooth_data_experiment(
    sys: &KgSpectralSystem,
    u0: &KgState,
    s: u32,
    nu: f64,
) -> Result<ExperimentReport> {
    check_nu(nu)?;
    let params = sys.params();
    let n = params.n();
    let m = params.m();
    let v0 = sys.constraint_values(u0)?;
    // Both states move under the same isometric flow, so t = 0 suffices.
    let mean = sys.exact_mean(&v0, 0.0)?;
    let lhs = sys.a_norm(&mean.difference(u0)?);
    let reproduced = sys.constraint_values(&mean)?;
    let scale = v0.iter().map(|x| x.abs()).fold(0.0, f64::max);
    let residual = reproduced
        .iter()
        .zip(&v0)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let points = params.num_points() as f64;
    let rhs_first = 3.0 * libm::sqrt(2.5) / libm::pow(points, 1.5 * (nu + 1.0)) * sys.a_norm(u0);
    let mut tail = 0.0;
    for (i, w) in sys.lambda().iter().enumerate() {
        let k = wavenumber(m, i);
        if k > n {
            let ks = libm::pow(k as f64, s as f64);
            tail += ks * ks * ((w * u0.q[i]) * (w * u0.q[i]) + u0.p[i] * u0.p[i]);
        }
    }
    let rhs_second = libm::sqrt(tail) / libm::pow((n + 1) as f64, s as f64);
    let rhs = rhs_first + rhs_second;
    let ratio = if rhs > 0.0 { lhs / rhs } else { 0.0 };

    let mut report = ExperimentReport::new("smooth", 0);
    record_params(&mut report, params);
    report
        .param("nu", nu)
        .param("s", s as usize)
        .param("hypothesis_ok", params.theorem_hypothesis(nu))
        .estimate("lhs", lhs, 0.0)
        .estimate("rhs_first", rhs_first, 0.0)
        .estimate("rhs_second", rhs_second, 0.0)
        .estimate("rhs", rhs, 0.0)
        .estimate("ratio", ratio, 0.0)
        .estimate("constraint_residual", residual, 0.0)
        .threshold("constraint_tolerance", 1e-10 * scale.max(1.0));
    report.verdict = if lhs.is_finite() && residual <= 1e-10 * scale.max(1.0) {
        Verdict::Pass
    } else {
        Verdict::Fail
    };
    Ok(report)
}

/// `E|e(t)|_A^2` when `v0` has independent standard normal entries instead of
/// coming from the model. The error is linear in `v0`, so the expectation is
/// the sum over unit vectors and is computed exactly.
pub fn lowerbound_scan(sys: &KgSpectralSystem, times: &[f64], nu: f64) -> Result<ExperimentReport> {
    check_nu(nu)?;
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidParams("times must be finite and nonnegative"));
    }
    let params = sys.params();
    let dim = 2 * params.num_points();
    let points = params.num_points() as f64;

    let mut report = ExperimentReport::new("lowerbound_scan", 0);
    record_params(&mut report, params);
    report.param("nu", nu).param("t", times).param(
        "hypothesis_ok",
        params.n() >= 4 && params.theorem_hypothesis(nu),
    );
    let mut unit = alloc::vec![0.0; dim];
    for &t in times {
        let mut total = Vec::with_capacity(dim);
        for j in 0..dim {
            unit.fill(0.0);
            unit[j] = 1.0;
            let e = sys
                .approx_mean(&unit, t)?
                .difference(&sys.exact_mean(&unit, t)?)?;
            total.push(sys.energy_norm_sq(&e));
        }
        report.estimate(&format!("mean_sq_error_t{t}"), pairwise_sum(&total), 0.0);
    }
    report.threshold(
        "claimed_rate",
        libm::pow(points, (nu + 1.0) * points / 4.0 - 1.0),
    );
    report.verdict = Verdict::Reported;
    Ok(report)
}
