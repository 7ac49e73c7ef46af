//! CSV and JSON rendering. Reals are written with 17 significant digits.

use std::collections::BTreeMap;

use optpredict_core::stochastic::{ExperimentReport, ParamValue, Verdict};
use serde::Serialize;

use crate::config::Format;
use crate::CliError;

/// `x` with 17 significant digits in scientific notation.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(u64),
    Real(f64),
    Bool(bool),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => fmt_real(*v),
            Cell::Bool(v) => v.to_string(),
            Cell::Text(v) => v.clone(),
        }
    }

    fn is_finite(&self) -> bool {
        !matches!(self, Cell::Real(v) if !v.is_finite())
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

/// A row-per-grid-point result, as produced by `bounds` and `compare`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub experiment: String,
    pub params: BTreeMap<String, ParamValue>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub verdict: Verdict,
    pub seed: u64,
    pub version: String,
}

impl Table {
    pub fn new(experiment: &str, columns: &[&str], seed: u64) -> Self {
        Self {
            experiment: experiment.to_string(),
            params: BTreeMap::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            verdict: Verdict::Pass,
            seed,
            version: optpredict_core::VERSION.to_string(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self, format: Format) -> Result<String, CliError> {
        if !self.rows.iter().flatten().all(Cell::is_finite) {
            return Err(CliError::Run(format!(
                "{}: non-finite value in output",
                self.experiment
            )));
        }
        match format {
            Format::Json => to_json(self),
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.columns).map_err(csv_err)?;
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::render))
                        .map_err(csv_err)?;
                }
                finish(w)
            }
        }
    }
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Run(format!("csv: {e}"))
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, CliError> {
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Run(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::Run(e.to_string()))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut s =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Run(format!("json: {e}")))?;
    s.push('\n');
    Ok(s)
}

fn render_param(p: &ParamValue) -> String {
    let join = |items: Vec<String>| items.join(";");
    match p {
        ParamValue::Bool(v) => v.to_string(),
        ParamValue::Int(v) => v.to_string(),
        ParamValue::Real(v) => fmt_real(*v),
        ParamValue::IntList(v) => join(v.iter().map(u64::to_string).collect()),
        ParamValue::RealList(v) => join(v.iter().map(|x| fmt_real(*x)).collect()),
    }
}

/// Renders an experiment report. CSV has one row per parameter, estimate
/// and threshold.
pub fn render_report(report: &ExperimentReport, format: Format) -> Result<String, CliError> {
    if !report.is_finite() {
        return Err(CliError::Run(format!(
            "{}: non-finite value in report",
            report.experiment
        )));
    }
    match format {
        Format::Json => to_json(report),
        Format::Csv => {
            let hypothesis_ok = match report.params.get("hypothesis_ok") {
                Some(ParamValue::Bool(b)) => *b,
                _ => true,
            }
            .to_string();
            let verdict = report.verdict.as_str();
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record([
                "experiment",
                "kind",
                "name",
                "value",
                "stderr",
                "verdict",
                "hypothesis_ok",
            ])
            .map_err(csv_err)?;
            let mut row = |kind: &str, name: &str, value: String, stderr: String| {
                w.write_record([
                    report.experiment.as_str(),
                    kind,
                    name,
                    &value,
                    &stderr,
                    verdict,
                    &hypothesis_ok,
                ])
            };
            row("param", "seed", report.seed.to_string(), String::new()).map_err(csv_err)?;
            row("param", "version", report.version.clone(), String::new()).map_err(csv_err)?;
            for (name, p) in &report.params {
                row("param", name, render_param(p), String::new()).map_err(csv_err)?;
            }
            for e in &report.estimates {
                row("estimate", &e.name, fmt_real(e.value), fmt_real(e.stderr)).map_err(csv_err)?;
            }
            for t in &report.thresholds {
                row("threshold", &t.name, fmt_real(t.value), String::new()).map_err(csv_err)?;
            }
            finish(w)
        }
    }
}
