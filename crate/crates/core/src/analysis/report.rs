use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Direction of the checked inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `statistic ≥ bound − tolerance`
    AtLeast,
    /// `statistic ≤ bound + tolerance`
    AtMost,
}

/// Outcome of one numerical check; `passed` is a pure function of
/// `statistic`, `relation`, `bound` and `tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub probe: String,
    pub instance: String,
    /// Named intermediate quantities, in insertion order.
    pub measured: Vec<(String, f64)>,
    pub statistic: f64,
    pub relation: Relation,
    pub bound: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl ProbeReport {
    pub fn new(
        probe: &str,
        instance: impl Into<String>,
        measured: Vec<(String, f64)>,
        statistic: f64,
        relation: Relation,
        bound: f64,
        tolerance: f64,
    ) -> Self {
        let passed = Self::evaluate(statistic, relation, bound, tolerance);
        Self {
            probe: probe.to_string(),
            instance: instance.into(),
            measured,
            statistic,
            relation,
            bound,
            tolerance,
            passed,
        }
    }

    pub fn evaluate(statistic: f64, relation: Relation, bound: f64, tolerance: f64) -> bool {
        match relation {
            Relation::AtLeast => statistic >= bound - tolerance,
            Relation::AtMost => statistic <= bound + tolerance,
        }
    }

    /// Whether the stored flag agrees with the stored quantities.
    pub fn is_consistent(&self) -> bool {
        self.passed == Self::evaluate(self.statistic, self.relation, self.bound, self.tolerance)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.measured.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

pub(crate) fn named(pairs: &[(&str, f64)]) -> Vec<(String, f64)> {
    pairs.iter().map(|(n, v)| (n.to_string(), *v)).collect()
}

pub fn reports_to_string(reports: &[ProbeReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&serde_json::to_string(r).expect("report serializes"));
        out.push('\n');
    }
    out
}

pub fn write_reports(reports: &[ProbeReport], path: &Path) -> Result<()> {
    fs::write(path, reports_to_string(reports)).map_err(|e| Error::io(path, e))
}

pub fn read_reports(path: &Path) -> Result<Vec<ProbeReport>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let r: ProbeReport = serde_json::from_str(l).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
            if !r.is_consistent() {
                return Err(Error::Validation(format!(
                    "line {}: pass flag disagrees with recorded values",
                    i + 1
                )));
            }
            Ok(r)
        })
        .collect()
}
