//! Verification reports and their JSON and text renderings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    /// The entry lacks the data the check needs.
    Skipped,
    /// The check could not be carried out (singular data, unbound symbol, ...).
    Error,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Skipped => "skipped",
            Status::Error => "error",
        }
    }

    pub fn is_ok(self) -> bool {
        matches!(self, Status::Pass | Status::Skipped)
    }
}

/// Where a check failed: an identity label or tensor index together with
/// the sample point (coordinates and parameters) that exposed it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub label: String,
    pub point: Vec<(String, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub status: Status,
    /// Largest residual seen; exact checks report the float value of the
    /// exact maximum, which is also given verbatim in `exact_residual`.
    pub max_residual: Option<f64>,
    pub exact_residual: Option<String>,
    /// For sampled identities, the largest `|value| / max(1, scale)` where
    /// scale is the biggest intermediate magnitude of the evaluation.
    pub normalized_residual: Option<f64>,
    pub witness: Option<Witness>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub entry: String,
    pub status: Status,
    pub seed: u64,
    pub mutation: Option<String>,
    /// Exact parameter values used by the exact checks, as rational strings.
    pub parameter_samples: Vec<BTreeMap<String, String>>,
    pub checks: Vec<CheckResult>,
    pub wall_time_ms: u64,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failing(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.status.is_ok())
            .map(|c| c.name.as_str())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadFailure {
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub status: Status,
    pub verified: usize,
    pub passed: usize,
    pub reports: Vec<VerificationReport>,
    pub load_errors: Vec<LoadFailure>,
}

impl Summary {
    pub fn from_parts(reports: Vec<VerificationReport>, load_errors: Vec<LoadFailure>) -> Self {
        let passed = reports.iter().filter(|r| r.status == Status::Pass).count();
        let status = if passed == reports.len() && load_errors.is_empty() {
            Status::Pass
        } else {
            Status::Fail
        };
        Self {
            status,
            verified: reports.len(),
            passed,
            reports,
            load_errors,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Text,
}

pub fn emit_report(report: &VerificationReport, format: Format) -> Vec<u8> {
    match format {
        Format::Json => to_json(report),
        Format::Text => report_text(report).into_bytes(),
    }
}

pub fn emit_summary(summary: &Summary, format: Format) -> Vec<u8> {
    match format {
        Format::Json => to_json(summary),
        Format::Text => {
            let mut out = String::new();
            for r in &summary.reports {
                out.push_str(&report_text(r));
                out.push('\n');
            }
            for e in &summary.load_errors {
                let _ = writeln!(out, "load error: {}: {}", e.path, e.message);
            }
            let _ = writeln!(
                out,
                "{}: {}/{} entries pass, {} load errors",
                summary.status.as_str(),
                summary.passed,
                summary.verified,
                summary.load_errors.len()
            );
            out.into_bytes()
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("reports contain only serializable data");
    out.push(b'\n');
    out
}

pub fn report_text(r: &VerificationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "entry {}  [{}]  seed {}", r.entry, r.status.as_str(), r.seed);
    if let Some(m) = &r.mutation {
        let _ = writeln!(out, "  mutation: {m}");
    }
    let width = r.checks.iter().map(|c| c.name.len()).max().unwrap_or(5).max(5);
    let _ = writeln!(out, "  {:<width$}  {:<7}  {:>12}  detail", "check", "status", "residual");
    for c in &r.checks {
        let res = c.max_residual.map_or_else(|| "-".to_string(), |v| format!("{v:.3e}"));
        let _ = writeln!(out, "  {:<width$}  {:<7}  {:>12}  {}", c.name, c.status.as_str(), res, c.detail);
        if let Some(w) = &c.witness {
            let pt = w
                .point
                .iter()
                .map(|(s, v)| format!("{s}={v:?}"))
                .collect::<Vec<_>>()
                .join(", ");
            let _ = writeln!(out, "  {:<width$}  witness {}: {}", "", w.label, pt);
        }
    }
    let _ = writeln!(out, "  wall time {} ms", r.wall_time_ms);
    out
}

/// JSON with the wall-time fields zeroed, for run-to-run comparison.
pub fn normalized_json(summary: &Summary) -> Vec<u8> {
    let mut s = summary.clone();
    for r in &mut s.reports {
        r.wall_time_ms = 0;
    }
    to_json(&s)
}
