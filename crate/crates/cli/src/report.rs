//! JSON report schema and writers.

use std::fs;
use std::path::Path;

use ktcy_core::reduction::Diagnostics;
use ktcy_core::solver::ContinuityState;
use serde::Serialize;
use serde_json::Value;

use crate::config::ProblemSpec;
use crate::CliError;

pub const REPORT_FILE: &str = "report.json";

/// Wall-clock measurements; the only part of a report that varies between
/// identical runs.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Timings {
    pub total_seconds: f64,
    pub per_stage_seconds: Vec<(String, f64)>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PathRecord {
    pub index: usize,
    pub t: f64,
    pub t_step: f64,
    pub c_t: f64,
    pub newton_iterations: usize,
    pub linear_iterations: usize,
    pub residual_history: Vec<f64>,
    #[serde(flatten)]
    pub diagnostics: Diagnostics,
}

impl PathRecord {
    pub fn new(index: usize, s: &ContinuityState) -> Self {
        Self {
            index,
            t: s.t,
            t_step: s.t_step,
            c_t: s.c_t,
            newton_iterations: s.diagnostics.newton_iterations,
            linear_iterations: s.diagnostics.steps.iter().map(|st| st.linear_iterations).sum(),
            residual_history: s.diagnostics.residual_history.clone(),
            diagnostics: s.diagnostics.summary.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FinalRecord {
    #[serde(flatten)]
    pub diagnostics: Diagnostics,
    pub c_t: f64,
    pub t: f64,
}

impl FinalRecord {
    pub fn new(s: &ContinuityState) -> Self {
        Self {
            diagnostics: s.diagnostics.summary.clone(),
            c_t: s.c_t,
            t: s.t,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Stall {
    pub t: f64,
    pub step: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    Stalled,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolveReport {
    pub spec_echo: ProblemSpec,
    pub grid_n: usize,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stall: Option<Stall>,
    pub path: Vec<PathRecord>,
    #[serde(rename = "final")]
    pub final_state: FinalRecord,
    pub timings: Timings,
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub measured: f64,
    /// `"<="` or `">="`.
    pub comparison: &'static str,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(suite: &str, name: &str, measured: f64, tolerance: f64) -> Self {
        Self {
            suite: suite.into(),
            name: name.into(),
            measured,
            comparison: "<=",
            tolerance,
            pass: measured <= tolerance,
        }
    }

    pub fn at_least(suite: &str, name: &str, measured: f64, tolerance: f64) -> Self {
        Self {
            suite: suite.into(),
            name: name.into(),
            measured,
            comparison: ">=",
            tolerance,
            pass: measured >= tolerance,
        }
    }

    /// An exact yes/no property, recorded as measured 0 (holds) or 1 (fails).
    pub fn exact(suite: &str, name: &str, holds: bool) -> Self {
        Self::at_most(suite, name, if holds { 0.0 } else { 1.0 }, 0.0)
    }

    pub fn describe(&self) -> String {
        format!(
            "{}/{}: measured {:e} {} {:e}",
            self.suite,
            self.name,
            self.measured,
            if self.pass { self.comparison } else { "violates" },
            self.tolerance
        )
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub spec_echo: ProblemSpec,
    pub grid_n: usize,
    pub suite: String,
    pub checks: Vec<Check>,
    pub all_pass: bool,
    pub timings: Timings,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepEntry {
    pub n: usize,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_state: Option<FinalRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub spec_echo: ProblemSpec,
    pub resolutions: Vec<SweepEntry>,
    /// Largest change of `sup_u` between consecutive resolutions.
    pub sup_u_max_change: f64,
    pub key_identity_strictly_decreasing: bool,
    pub all_pass: bool,
    pub timings: Timings,
}

/// Path of the first `null` (a non-finite float) in `v`, if any.
pub fn find_non_finite(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some(String::new()),
        Value::Number(n) if n.as_f64().is_some_and(|x| !x.is_finite()) => Some(String::new()),
        Value::Array(items) => items
            .iter()
            .enumerate()
            .find_map(|(i, x)| find_non_finite(x).map(|p| format!("[{i}]{p}"))),
        Value::Object(map) => map
            .iter()
            .find_map(|(k, x)| find_non_finite(x).map(|p| format!(".{k}{p}"))),
        _ => None,
    }
}

/// Serializes `report` to `<dir>/report.json`, refusing reports with
/// non-finite numbers.
pub fn write_report(dir: &Path, report: &impl Serialize) -> Result<Value, CliError> {
    let value = serde_json::to_value(report).map_err(|e| CliError::Internal(e.to_string()))?;
    if let Some(path) = find_non_finite(&value) {
        return Err(CliError::Internal(format!("report contains a non-finite number at {path}")));
    }
    fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(&value).map_err(|e| CliError::Internal(e.to_string()))?;
    text.push('\n');
    fs::write(dir.join(REPORT_FILE), text)?;
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn non_finite_detection() {
        assert_eq!(find_non_finite(&json!({"a": [1.0, 2.0], "b": {"c": 3}})), None);
        let v = serde_json::to_value(vec![1.0, f64::NAN]).unwrap();
        assert_eq!(find_non_finite(&v).as_deref(), Some("[1]"));
        assert_eq!(find_non_finite(&json!({"x": {"y": null}})).as_deref(), Some(".x.y"));
    }

    #[test]
    fn checks_compare_in_the_stated_direction() {
        assert!(Check::at_most("s", "n", 1e-9, 1e-8).pass);
        assert!(!Check::at_most("s", "n", 1e-7, 1e-8).pass);
        assert!(Check::at_least("s", "m", -1e-9, -1e-6).pass);
        assert!(!Check::exact("s", "e", false).pass);
        assert!(Check::at_most("s", "n", 1e-7, 1e-8).describe().contains("violates"));
    }
}
