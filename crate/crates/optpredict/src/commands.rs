//! One function per subcommand. Each returns the rendered primary output,
//! any side files and the exit status.

use std::path::PathBuf;

use optpredict_core::klein_gordon::{lemma2_bound, KgParams, KgSpectralSystem};
use optpredict_core::prediction::error_integral_with;
use optpredict_core::stochastic::{
    lowerbound_scan, smooth_data_experiment, smooth_profile, verify_constraint_energy,
    verify_covariance, verify_theorem1, verify_theorem2, ExperimentReport, GaussianMeasure,
    RngStream, Theorem2Config, Verdict,
};

use crate::config::{read_vector, RunConfig};
use crate::executor::ThreadExecutor;
use crate::field::{evaluate, FIELD_POINTS};
use crate::output::{render_report, Cell, Table};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    /// Defect norm against its analytic bound over a parameter grid.
    Bounds,
    /// Exact and reduced means along a trajectory.
    Compare,
    /// Probabilistic error bound by Monte Carlo.
    Theorem1,
    /// Convergence in spectral resolution by Monte Carlo.
    Theorem2,
    /// Trace and covariance identities of the constraint data.
    Identities,
    /// Error for data generated by a smooth solution.
    Smooth,
    /// Mean squared error for data inconsistent with the model.
    LowerboundScan,
}

/// Result of running a command.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub output: String,
    pub side_files: Vec<(PathBuf, String)>,
}

/// Quadrature tolerance for the error integral in `compare`.
const QUADRATURE_TOL: f64 = 1e-11;
/// Allowed gap between the direct and the integral form of the error.
const COMPARE_AGREEMENT: f64 = 1e-6;

pub fn run(command: Command, cfg: &RunConfig, exec: &ThreadExecutor) -> Result<Outcome, CliError> {
    match command {
        Command::Bounds => bounds(cfg),
        Command::Compare => compare(cfg),
        Command::Theorem1 => theorem1(cfg, exec),
        Command::Theorem2 => theorem2(cfg, exec),
        Command::Identities => identities(cfg, exec),
        Command::Smooth => smooth(cfg),
        Command::LowerboundScan => lowerbound(cfg),
    }
}

fn require(ok: bool, cfg: &RunConfig, what: &str) -> Result<(), CliError> {
    if ok || cfg.force_hypothesis {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "hypothesis violated: {what}; pass --force-hypothesis to run anyway"
        )))
    }
}

fn theorem_condition(nu: f64) -> String {
    format!("(2n+1) sigma^2 >= 6 (nu+1) log(2n+1) with nu = {nu}")
}

/// The single `(n, r, sigma)` of a one-instance command.
fn single_system(cfg: &RunConfig) -> Result<KgSpectralSystem, CliError> {
    let n = cfg.single_n()?;
    let params = KgParams::new(n, cfg.single_r()?, cfg.single_sigma(n)?)?;
    Ok(KgSpectralSystem::build(params)?)
}

fn report_outcome(mut report: ExperimentReport, cfg: &RunConfig) -> Result<Outcome, CliError> {
    if cfg.force_hypothesis {
        report.param("force_hypothesis", true);
    }
    Ok(Outcome {
        exit_code: report.verdict.exit_code(),
        output: render_report(&report, cfg.format)?,
        side_files: Vec::new(),
    })
}

fn table_outcome(mut table: Table, cfg: &RunConfig) -> Result<Outcome, CliError> {
    if cfg.force_hypothesis {
        table.params.insert("force_hypothesis".into(), true.into());
    }
    Ok(Outcome {
        exit_code: table.verdict.exit_code(),
        output: table.render(cfg.format)?,
        side_files: Vec::new(),
    })
}

fn bounds(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let mut table = Table::new(
        "bounds",
        &[
            "n",
            "r",
            "sigma",
            "weight",
            "exact_defect_norm",
            "lemma2_bound",
            "hypothesis_ok",
        ],
        cfg.seed,
    );
    for &n in &cfg.n {
        for sigma in cfg.sigma.resolve(n, cfg.nu) {
            for &r in &cfg.r {
                let params = KgParams::new(n, r, sigma)?;
                let ok = params.lemma2_hypothesis();
                require(
                    ok,
                    cfg,
                    &format!("(2n+1) sigma^2 >= 2 at n = {n}, sigma = {sigma}"),
                )?;
                let bound = lemma2_bound(&params, true)?;
                let exact = KgSpectralSystem::build(params)?.exact_defect_norm();
                if ok && exact > bound {
                    table.verdict = Verdict::Fail;
                }
                table.push(vec![
                    n.into(),
                    r.into(),
                    sigma.into(),
                    params.kernel_weight().into(),
                    exact.into(),
                    bound.into(),
                    ok.into(),
                ]);
            }
        }
    }
    table_outcome(table, cfg)
}

fn compare(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sys = single_system(cfg)?;
    let params = *sys.params();
    let v0 = match &cfg.v0_file {
        Some(path) => read_vector(path)?,
        None => {
            let state = GaussianMeasure::new(&sys).sample_prior(RngStream::new(cfg.seed, 0));
            sys.constraint_values(&state)?
        }
    };
    if v0.len() != 2 * params.num_points() {
        return Err(CliError::Usage(format!(
            "config key `v0_file`: expected {} values, found {}",
            2 * params.num_points(),
            v0.len()
        )));
    }
    let times = if cfg.t_given {
        cfg.t.clone()
    } else {
        vec![0.0, 0.5, 1.0, 2.0, 5.0]
    };
    let hypothesis_ok = cfg.nu > 0.0 && params.theorem_hypothesis(cfg.nu);
    let (lin, constraints) = sys.assemble()?;
    let points = params.num_points() as f64;

    let mut table = Table::new(
        "compare",
        &[
            "t",
            "error_direct",
            "error_quadrature",
            "lemma1_bound",
            "theorem1_threshold",
            "hypothesis_ok",
        ],
        cfg.seed,
    );
    table.params.insert("n".into(), params.n().into());
    table.params.insert("r".into(), params.r().into());
    table.params.insert("sigma".into(), params.sigma().into());
    table.params.insert("nu".into(), cfg.nu.into());

    let mut field = Table::new(
        "compare_field",
        &["t", "x", "u_exact", "u_approx", "pi_exact", "pi_approx"],
        cfg.seed,
    );
    for &t in &times {
        let exact = sys.exact_mean(&v0, t)?;
        let approx = sys.approx_mean(&v0, t)?;
        let direct = sys.a_norm(&approx.difference(&exact)?);
        let e = error_integral_with(&sys, &lin, &constraints, &v0, t, QUADRATURE_TOL)?;
        let quadrature = lin.a_norm(&e);
        let bound = sys.lemma1_bound(&v0, t)?;
        if (direct - quadrature).abs() > COMPARE_AGREEMENT || direct > bound + 1e-9 {
            table.verdict = Verdict::Fail;
        }
        table.push(vec![
            t.into(),
            direct.into(),
            quadrature.into(),
            bound.into(),
            (2.3 * t / points.powf(cfg.nu)).into(),
            hypothesis_ok.into(),
        ]);

        let columns = [
            evaluate(&exact.q, FIELD_POINTS),
            evaluate(&approx.q, FIELD_POINTS),
            evaluate(&exact.p, FIELD_POINTS),
            evaluate(&approx.p, FIELD_POINTS),
        ];
        for j in 0..FIELD_POINTS {
            let x = 2.0 * std::f64::consts::PI * j as f64 / FIELD_POINTS as f64;
            let mut row = vec![Cell::Real(t), Cell::Real(x)];
            row.extend(columns.iter().map(|c| Cell::Real(c[j])));
            field.push(row);
        }
    }
    let mut outcome = table_outcome(table, cfg)?;
    if let Some(out) = &cfg.out {
        let stem = out
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("compare");
        let path = out.with_file_name(format!("{stem}_field.csv"));
        outcome
            .side_files
            .push((path, field.render(crate::config::Format::Csv)?));
    }
    Ok(outcome)
}

fn theorem1(cfg: &RunConfig, exec: &ThreadExecutor) -> Result<Outcome, CliError> {
    let sys = single_system(cfg)?;
    let ok = cfg.nu > 0.0 && sys.params().theorem_hypothesis(cfg.nu);
    require(
        ok,
        cfg,
        &format!("nu > 0 and {}", theorem_condition(cfg.nu)),
    )?;
    let report = verify_theorem1(&sys, cfg.nu, cfg.single_t()?, cfg.samples, cfg.seed, exec)?;
    report_outcome(report, cfg)
}

fn theorem2(cfg: &RunConfig, exec: &ThreadExecutor) -> Result<Outcome, CliError> {
    let n = cfg.single_n()?;
    let sigma = cfg.single_sigma(n)?;
    let ok = KgParams::new(n, 0, sigma)?.theorem_hypothesis(cfg.nu);
    require(ok, cfg, &theorem_condition(cfg.nu))?;
    let t2 = Theorem2Config {
        n,
        sigma,
        nu: cfg.nu,
        rs: cfg.r.clone(),
        r_max: cfg.r_max,
        samples: cfg.samples,
        seed: cfg.seed,
        check_time_invariance: cfg.check_time_invariance,
    };
    report_outcome(verify_theorem2(&t2, exec)?, cfg)
}

fn identities(cfg: &RunConfig, exec: &ThreadExecutor) -> Result<Outcome, CliError> {
    let sys = single_system(cfg)?;
    let energy = verify_constraint_energy(&sys, cfg.samples, cfg.seed, exec)?;
    let covariance = verify_covariance(&sys, cfg.samples, cfg.seed, exec)?;
    let mut report = ExperimentReport::new("identities", cfg.seed);
    report.params = covariance.params.clone();
    report.estimates = energy.estimates;
    report.estimates.extend(covariance.estimates);
    report.thresholds = energy.thresholds;
    report.thresholds.extend(covariance.thresholds);
    let verdicts = [energy.verdict, covariance.verdict];
    report.verdict = if verdicts.contains(&Verdict::Fail) {
        Verdict::Fail
    } else if verdicts.contains(&Verdict::Inconclusive) {
        Verdict::Inconclusive
    } else {
        Verdict::Pass
    };
    report_outcome(report, cfg)
}

fn smooth(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sys = single_system(cfg)?;
    require(
        sys.params().theorem_hypothesis(cfg.nu),
        cfg,
        &theorem_condition(cfg.nu),
    )?;
    let u0 = smooth_profile(sys.params(), cfg.decay);
    let mut report = smooth_data_experiment(&sys, &u0, cfg.s, cfg.nu)?;
    report.seed = cfg.seed;
    report.param("decay", cfg.decay);
    report_outcome(report, cfg)
}

fn lowerbound(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sys = single_system(cfg)?;
    let times = if cfg.t_given {
        cfg.t.clone()
    } else {
        (0..=16).map(|i| 0.5 * i as f64).collect()
    };
    let mut report = lowerbound_scan(&sys, &times, cfg.nu)?;
    report.seed = cfg.seed;
    let mut outcome = report_outcome(report, cfg)?;
    outcome.exit_code = 0;
    Ok(outcome)
}
