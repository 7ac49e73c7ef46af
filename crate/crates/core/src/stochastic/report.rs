use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

/// Outcome of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "SCREAMING_SNAKE_CASE"))]
pub enum Verdict {
    Pass,
    Fail,
    /// Too few samples, or the statement's hypothesis does not hold.
    Inconclusive,
    /// Exploratory run that asserts nothing.
    Reported,
}

impl Verdict {
    /// Process exit status for this verdict.
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass | Verdict::Reported => 0,
            Verdict::Fail => 1,
            Verdict::Inconclusive => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Inconclusive => "INCONCLUSIVE",
            Verdict::Reported => "REPORTED",
        }
    }
}

/// A parameter recorded in a report.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(untagged))]
pub enum ParamValue {
    Bool(bool),
    Int(u64),
    Real(f64),
    IntList(Vec<u64>),
    RealList(Vec<f64>),
}

impl From<bool> for ParamValue {
    fn from(v: bool) -> Self {
        ParamValue::Bool(v)
    }
}

impl From<usize> for ParamValue {
    fn from(v: usize) -> Self {
        ParamValue::Int(v as u64)
    }
}

impl From<u64> for ParamValue {
    fn from(v: u64) -> Self {
        ParamValue::Int(v)
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Real(v)
    }
}

impl From<&[usize]> for ParamValue {
    fn from(v: &[usize]) -> Self {
        ParamValue::IntList(v.iter().map(|&x| x as u64).collect())
    }
}

impl From<&[f64]> for ParamValue {
    fn from(v: &[f64]) -> Self {
        ParamValue::RealList(v.to_vec())
    }
}

/// A computed quantity. Deterministic values carry `stderr = 0`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Estimate {
    pub name: String,
    pub value: f64,
    pub stderr: f64,
}

/// A bound or target the estimates are compared against.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Threshold {
    pub name: String,
    pub value: f64,
}

/// Self-contained record of one experiment run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentReport {
    pub experiment: String,
    pub params: BTreeMap<String, ParamValue>,
    pub estimates: Vec<Estimate>,
    pub thresholds: Vec<Threshold>,
    pub verdict: Verdict,
    pub seed: u64,
    pub version: String,
}

impl ExperimentReport {
    pub fn new(experiment: &str, seed: u64) -> Self {
        Self {
            experiment: experiment.to_string(),
            params: BTreeMap::new(),
            estimates: Vec::new(),
            thresholds: Vec::new(),
            verdict: Verdict::Reported,
            seed,
            version: crate::VERSION.to_string(),
        }
    }

    pub fn param(&mut self, name: &str, value: impl Into<ParamValue>) -> &mut Self {
        self.params.insert(name.to_string(), value.into());
        self
    }

    pub fn estimate(&mut self, name: &str, value: f64, stderr: f64) -> &mut Self {
        self.estimates.push(Estimate {
            name: name.to_string(),
            value,
            stderr,
        });
        self
    }

    pub fn threshold(&mut self, name: &str, value: f64) -> &mut Self {
        self.thresholds.push(Threshold {
            name: name.to_string(),
            value,
        });
        self
    }

    pub fn find_estimate(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|e| e.name == name)
    }

    pub fn find_threshold(&self, name: &str) -> Option<f64> {
        self.thresholds
            .iter()
            .find(|t| t.name == name)
            .map(|t| t.value)
    }

    /// True when every number in the report is finite.
    pub fn is_finite(&self) -> bool {
        let params_ok = self.params.values().all(|p| match p {
            ParamValue::Real(x) => x.is_finite(),
            ParamValue::RealList(v) => v.iter().all(|x| x.is_finite()),
            _ => true,
        });
        params_ok
            && self
                .estimates
                .iter()
                .all(|e| e.value.is_finite() && e.stderr.is_finite())
            && self.thresholds.iter().all(|t| t.value.is_finite())
    }
}
