//! Run manifests, residual tables and merged reports.

use std::collections::BTreeMap;
use std::path::Path;

use causality_lab::CheckReport;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::Verdict;
use crate::CliError;

pub const SCHEMA: &str = "causality-lab.manifest/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub id: String,
    pub expected: Verdict,
    pub met: bool,
    pub report: CheckReport,
}

/// Everything a run produced that depends only on its config. Wall time
/// lives in a separate timing file so manifests compare byte for byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub run_id: String,
    pub tool_version: String,
    pub config_hash: String,
    pub kind: String,
    pub seed: u64,
    pub tolerance: f64,
    pub expectations_met: bool,
    pub checks: Vec<CheckRecord>,
    #[serde(default)]
    pub values: BTreeMap<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub run_id: String,
    pub config_hash: String,
    pub wall_time_ms: u128,
}

impl RunManifest {
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
        let v: Value =
            serde_json::from_str(&text).map_err(|e| CliError::Incompatible(format!("{}: {e}", path.display())))?;
        match v.get("schema").and_then(Value::as_str) {
            Some(SCHEMA) => {}
            Some(other) => {
                return Err(CliError::Incompatible(format!(
                    "{}: schema {other:?}, expected {SCHEMA:?}",
                    path.display()
                )))
            }
            None => return Err(CliError::Incompatible(format!("{}: no schema field", path.display()))),
        }
        serde_json::from_value(v).map_err(|e| CliError::Incompatible(format!("{}: {e}", path.display())))
    }

    /// Rows of the residual table.
    pub fn rows(&self) -> Vec<Row> {
        self.checks
            .iter()
            .map(|c| Row {
                run_id: self.run_id.clone(),
                check: c.id.clone(),
                condition: c.report.condition.clone(),
                expected: c.expected,
                holds: c.report.holds,
                met: c.met,
                max_residual: c.report.max_residual,
                tolerance: c.report.tolerance,
                witnesses: c.report.witnesses.len(),
                skipped: c.report.skipped.len(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub run_id: String,
    pub check: String,
    pub condition: String,
    pub expected: Verdict,
    pub holds: bool,
    pub met: bool,
    pub max_residual: f64,
    pub tolerance: f64,
    pub witnesses: usize,
    pub skipped: usize,
}

pub fn rows_to_csv(rows: &[Row]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv is utf-8")
}

pub fn rows_to_table(rows: &[Row]) -> String {
    let head = ["run_id", "check", "expected", "holds", "met", "max_residual", "tolerance"];
    let cells: Vec<[String; 7]> = rows
        .iter()
        .map(|r| {
            [
                r.run_id.clone(),
                r.check.clone(),
                format!("{:?}", r.expected).to_lowercase(),
                r.holds.to_string(),
                if r.met { "ok".into() } else { "UNMET".into() },
                format!("{:.3e}", r.max_residual),
                format!("{:.0e}", r.tolerance),
            ]
        })
        .collect();
    let mut width = head.map(str::len);
    for c in &cells {
        for (w, s) in width.iter_mut().zip(c) {
            *w = (*w).max(s.chars().count());
        }
    }
    let line = |c: &[String]| {
        c.iter()
            .zip(width)
            .map(|(s, w)| format!("{s:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(&head.map(String::from));
    out.push('\n');
    out.push_str(&line(&width.map(|w| "-".repeat(w))));
    out.push('\n');
    for c in &cells {
        out.push_str(&line(c));
        out.push('\n');
    }
    out
}

/// Concatenates the tables of several manifests without recomputing.
pub fn merge(paths: &[impl AsRef<Path>]) -> Result<Vec<Row>, CliError> {
    let mut rows = Vec::new();
    for p in paths {
        rows.extend(RunManifest::load(p.as_ref())?.rows());
    }
    Ok(rows)
}
