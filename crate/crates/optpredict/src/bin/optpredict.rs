use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use optpredict::commands::{run, Command, Outcome};
use optpredict::config::{read_file, RunConfig};
use optpredict::executor::ThreadExecutor;
use optpredict::CliError;

/// Optimal prediction experiments for the Klein-Gordon equation.
///
/// Exit status: 0 pass, 1 fail, 2 usage error, 3 inconclusive.
/// OPTPREDICT_THREADS caps the number of worker threads.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    #[arg(value_enum)]
    command: Command,

    /// Flat `key = value` file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Constraint resolution; list `1,2` or range `1..4`.
    #[arg(long)]
    n: Option<String>,
    /// Spectral excess; list or range.
    #[arg(long)]
    r: Option<String>,
    /// Kernel width(s), or `boundary` for the theorem hypothesis boundary.
    #[arg(long)]
    sigma: Option<String>,
    /// Alternative to sigma: values of (2n+1) sigma^2.
    #[arg(long)]
    weight: Option<String>,
    /// Rate exponent nu >= 0 (default 0.5)
    #[arg(long)]
    nu: Option<String>,
    /// Time(s).
    #[arg(long)]
    t: Option<String>,
    /// Monte Carlo sample count (default 10000)
    #[arg(long)]
    samples: Option<String>,
    /// Base RNG seed (default 0)
    #[arg(long)]
    seed: Option<String>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<String>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    /// Run even where a hypothesis fails; such rows are flagged.
    #[arg(long)]
    force_hypothesis: bool,
    /// Reference resolution for theorem2 (default r + 2).
    #[arg(long)]
    r_max: Option<String>,
    /// Derivative order in the smooth-data bound.
    #[arg(long)]
    s: Option<String>,
    /// Decay exponent of the smooth profile.
    #[arg(long)]
    decay: Option<String>,
    /// theorem2: also check that differences are constant in time.
    #[arg(long)]
    check_time_invariance: bool,
    /// compare: read v0 from this file instead of sampling it.
    #[arg(long)]
    v0_file: Option<String>,
}

impl Cli {
    fn pairs(&self) -> Result<Vec<(String, String)>, CliError> {
        let mut pairs = match &self.config {
            Some(path) => read_file(path)?,
            None => Vec::new(),
        };
        let flags = [
            ("n", &self.n),
            ("r", &self.r),
            ("sigma", &self.sigma),
            ("weight", &self.weight),
            ("nu", &self.nu),
            ("t", &self.t),
            ("samples", &self.samples),
            ("seed", &self.seed),
            ("out", &self.out),
            ("format", &self.format),
            ("r_max", &self.r_max),
            ("s", &self.s),
            ("decay", &self.decay),
            ("v0_file", &self.v0_file),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                // A flag replaces whichever of sigma/weight the file set.
                if key == "sigma" || key == "weight" {
                    pairs.retain(|(k, _)| k != "sigma" && k != "weight");
                }
                pairs.push((key.to_string(), v.clone()));
            }
        }
        if self.force_hypothesis {
            pairs.push(("force_hypothesis".into(), "true".into()));
        }
        if self.check_time_invariance {
            pairs.push(("check_time_invariance".into(), "true".into()));
        }
        Ok(pairs)
    }
}

fn execute(cli: &Cli) -> Result<(Outcome, RunConfig), CliError> {
    let cfg = RunConfig::from_pairs(&cli.pairs()?)?;
    let outcome = run(cli.command, &cfg, &ThreadExecutor::from_env())?;
    Ok((outcome, cfg))
}

fn write_outputs(outcome: &Outcome, cfg: &RunConfig) -> std::io::Result<()> {
    match &cfg.out {
        Some(path) => std::fs::write(path, &outcome.output)?,
        None => std::io::stdout().write_all(outcome.output.as_bytes())?,
    }
    for (path, text) in &outcome.side_files {
        std::fs::write(path, text)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = execute(&cli).and_then(|(outcome, cfg)| {
        write_outputs(&outcome, &cfg)?;
        Ok(outcome.exit_code)
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("optpredict: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
