//! Flat `key = value` configuration with command-line overrides.
//!
//! Files hold one `key = value` per line; `#` starts a comment. Keys may use
//! `-` or `_`. Integer lists accept `1,2,4` and inclusive ranges `1..4`;
//! real lists accept `0.5,1,2`. Every error names the offending key.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Recognised keys, in the spelling used in files.
pub const KEYS: &[&str] = &[
    "n",
    "r",
    "sigma",
    "weight",
    "nu",
    "t",
    "samples",
    "seed",
    "out",
    "format",
    "force_hypothesis",
    "r_max",
    "s",
    "decay",
    "check_time_invariance",
    "v0_file",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// How the kernel width is chosen for each `n`.
#[derive(Debug, Clone, PartialEq)]
pub enum SigmaSpec {
    /// Explicit widths.
    Values(Vec<f64>),
    /// Values of `(2n + 1) sigma^2`.
    Weights(Vec<f64>),
    /// The boundary `(2n + 1) sigma^2 = 6 (nu + 1) log(2n + 1)`.
    Boundary,
}

impl SigmaSpec {
    pub fn resolve(&self, n: usize, nu: f64) -> Vec<f64> {
        let points = (2 * n + 1) as f64;
        match self {
            SigmaSpec::Values(v) => v.clone(),
            SigmaSpec::Weights(w) => w.iter().map(|w| (w / points).sqrt()).collect(),
            SigmaSpec::Boundary => vec![(6.0 * (nu + 1.0) * points.ln() / points).sqrt()],
        }
    }
}

/// Validated settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: Vec<usize>,
    pub r: Vec<usize>,
    pub sigma: SigmaSpec,
    pub nu: f64,
    pub t: Vec<f64>,
    pub samples: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub force_hypothesis: bool,
    pub r_max: Option<usize>,
    pub s: u32,
    pub decay: f64,
    pub check_time_invariance: bool,
    pub v0_file: Option<PathBuf>,
    /// Whether `t` was given explicitly.
    pub t_given: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            n: vec![1],
            r: vec![1],
            sigma: SigmaSpec::Boundary,
            nu: 0.5,
            t: vec![1.0],
            samples: 10_000,
            seed: 0,
            out: None,
            format: Format::Csv,
            force_hypothesis: false,
            r_max: None,
            s: 2,
            decay: 3.0,
            check_time_invariance: false,
            v0_file: None,
            t_given: false,
        }
    }
}

fn usage(key: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("config key `{key}`: {msg}"))
}

fn normalize_key(key: &str) -> String {
    key.trim().replace('-', "_")
}

/// Reads `key = value` pairs from a file.
pub fn read_file(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    parse_text(&text)
}

pub fn parse_text(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!(
                "config line {}: expected `key = value`, found `{line}`",
                lineno + 1
            )));
        };
        pairs.push((normalize_key(key), value.trim().to_string()));
    }
    Ok(pairs)
}

fn parse_usize_list(key: &str, value: &str) -> Result<Vec<usize>, CliError> {
    let mut out = Vec::new();
    for item in value.split(',').map(str::trim) {
        if let Some((a, b)) = item.split_once("..") {
            let a: usize = a
                .trim()
                .parse()
                .map_err(|_| usage(key, format!("bad range `{item}`")))?;
            let b: usize = b
                .trim()
                .parse()
                .map_err(|_| usage(key, format!("bad range `{item}`")))?;
            if b < a {
                return Err(usage(key, format!("empty range `{item}`")));
            }
            out.extend(a..=b);
        } else {
            out.push(
                item.parse()
                    .map_err(|_| usage(key, format!("not an integer: `{item}`")))?,
            );
        }
    }
    Ok(out)
}

fn parse_f64(key: &str, item: &str) -> Result<f64, CliError> {
    let x: f64 = item
        .trim()
        .parse()
        .map_err(|_| usage(key, format!("not a number: `{item}`")))?;
    if !x.is_finite() {
        return Err(usage(key, "must be finite"));
    }
    Ok(x)
}

fn parse_f64_list(key: &str, value: &str) -> Result<Vec<f64>, CliError> {
    value.split(',').map(|item| parse_f64(key, item)).collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value.trim().to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        other => Err(usage(key, format!("not a boolean: `{other}`"))),
    }
}

fn single<T: Copy>(key: &str, v: &[T]) -> Result<T, CliError> {
    match v {
        [x] => Ok(*x),
        _ => Err(usage(key, "expected a single value")),
    }
}

impl RunConfig {
    /// Builds a configuration from pairs; later pairs override earlier ones.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self, CliError> {
        let mut map: BTreeMap<&str, &str> = BTreeMap::new();
        for (k, v) in pairs {
            if !KEYS.contains(&k.as_str()) {
                return Err(usage(k, "unknown key"));
            }
            map.insert(k, v);
        }
        let mut cfg = RunConfig::default();
        if let Some(v) = map.get("n") {
            cfg.n = parse_usize_list("n", v)?;
            if cfg.n.contains(&0) {
                return Err(usage("n", "must be at least 1"));
            }
        }
        if let Some(v) = map.get("r") {
            cfg.r = parse_usize_list("r", v)?;
        }
        match (map.get("sigma"), map.get("weight")) {
            (Some(_), Some(_)) => return Err(usage("weight", "cannot be combined with `sigma`")),
            (Some(v), None) if v.trim() == "boundary" => cfg.sigma = SigmaSpec::Boundary,
            (Some(v), None) => {
                let s = parse_f64_list("sigma", v)?;
                if s.iter().any(|x| *x <= 0.0) {
                    return Err(usage("sigma", "must be positive"));
                }
                cfg.sigma = SigmaSpec::Values(s);
            }
            (None, Some(v)) => {
                let w = parse_f64_list("weight", v)?;
                if w.iter().any(|x| *x <= 0.0) {
                    return Err(usage("weight", "must be positive"));
                }
                cfg.sigma = SigmaSpec::Weights(w);
            }
            (None, None) => {}
        }
        if let Some(v) = map.get("nu") {
            cfg.nu = parse_f64("nu", v)?;
            if cfg.nu < 0.0 {
                return Err(usage("nu", "must be nonnegative"));
            }
        }
        if let Some(v) = map.get("t") {
            cfg.t = parse_f64_list("t", v)?;
            if cfg.t.iter().any(|x| *x < 0.0) {
                return Err(usage("t", "must be nonnegative"));
            }
            cfg.t_given = true;
        }
        if let Some(v) = map.get("samples") {
            cfg.samples = single("samples", &parse_usize_list("samples", v)?)?;
            if cfg.samples == 0 {
                return Err(usage("samples", "must be at least 1"));
            }
        }
        if let Some(v) = map.get("seed") {
            cfg.seed = v
                .trim()
                .parse()
                .map_err(|_| usage("seed", format!("not a u64: `{v}`")))?;
        }
        if let Some(v) = map.get("out") {
            cfg.out = Some(PathBuf::from(v.trim()));
        }
        if let Some(v) = map.get("format") {
            cfg.format = match v.trim() {
                "csv" => Format::Csv,
                "json" => Format::Json,
                other => {
                    return Err(usage(
                        "format",
                        format!("expected csv or json, found `{other}`"),
                    ))
                }
            };
        }
        if let Some(v) = map.get("force_hypothesis") {
            cfg.force_hypothesis = parse_bool("force_hypothesis", v)?;
        }
        if let Some(v) = map.get("r_max") {
            cfg.r_max = Some(single("r_max", &parse_usize_list("r_max", v)?)?);
        }
        if let Some(v) = map.get("s") {
            cfg.s = v
                .trim()
                .parse()
                .map_err(|_| usage("s", format!("not an integer: `{v}`")))?;
        }
        if let Some(v) = map.get("decay") {
            cfg.decay = parse_f64("decay", v)?;
        }
        if let Some(v) = map.get("check_time_invariance") {
            cfg.check_time_invariance = parse_bool("check_time_invariance", v)?;
        }
        if let Some(v) = map.get("v0_file") {
            cfg.v0_file = Some(PathBuf::from(v.trim()));
        }
        if cfg.n.is_empty() || cfg.r.is_empty() || cfg.t.is_empty() {
            return Err(CliError::Usage("config: empty list".into()));
        }
        Ok(cfg)
    }

    pub fn single_n(&self) -> Result<usize, CliError> {
        single("n", &self.n)
    }

    pub fn single_r(&self) -> Result<usize, CliError> {
        single("r", &self.r)
    }

    pub fn single_t(&self) -> Result<f64, CliError> {
        single("t", &self.t)
    }

    /// The one kernel width for a single-`n` command.
    pub fn single_sigma(&self, n: usize) -> Result<f64, CliError> {
        let key = match self.sigma {
            SigmaSpec::Weights(_) => "weight",
            _ => "sigma",
        };
        single(key, &self.sigma.resolve(n, self.nu))
    }
}

/// Reads whitespace- or comma-separated numbers.
pub fn read_vector(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage("v0_file", format!("cannot read {}: {e}", path.display())))?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|s| !s.is_empty())
        .map(|s| parse_f64("v0_file", s))
        .collect()
}
