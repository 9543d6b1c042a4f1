//! Batch front end: configs, suites and report files.

pub mod config;
pub mod report;
pub mod setup;
pub mod suites;

use lpkit_core::operators::{norm_factor, pointwise_factor};
use lpkit_core::{Error, Estimate, Result};
use report::Report;
use std::collections::BTreeMap;
use std::path::Path;

/// Exit status for invalid input.
pub const EXIT_INVALID: i32 = 4;

/// Run `suite` and write report.json, tables/*.csv and figures/*.svg under
/// `out_dir`.
pub fn run_to_dir(suite: &str, s: &setup::Setup, out_dir: &Path) -> Result<Report> {
    let out = suites::run_suite(suite, s)?;
    std::fs::create_dir_all(out_dir.join("tables"))?;
    std::fs::create_dir_all(out_dir.join("figures"))?;
    let mut files = Vec::new();
    for t in &out.tables {
        files.push(t.write(out_dir)?);
    }
    for fg in &out.figures {
        files.push(fg.write(out_dir)?);
    }
    files.sort();
    let mut constants = BTreeMap::new();
    constants.insert("pointwise_factor".to_string(), Estimate::exact(pointwise_factor(&s.params)));
    constants.insert("norm_factor".to_string(), Estimate::exact(norm_factor(&s.params)));
    let to_json = |v: serde_json::Result<serde_json::Value>| v.map_err(|e| Error::Io(e.to_string()));
    let report = Report {
        schema: report::SCHEMA,
        version: env!("CARGO_PKG_VERSION"),
        suite: suite.to_string(),
        seed: s.seed,
        watermark: s.watermark(),
        config: s.cfg.keys().clone(),
        params: to_json(serde_json::to_value(&s.params))?,
        plan: to_json(serde_json::to_value(&s.plan))?,
        constants,
        verdict: Report::overall(&out.checks),
        checks: out.checks,
        files,
    };
    let text = serde_json::to_string_pretty(&report).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(out_dir.join("report.json"), text + "\n")?;
    Ok(report)
}

/// Exit code of an error: input problems map to 4, everything else to 1.
pub fn error_exit_code(e: &Error) -> i32 {
    match e {
        Error::InvalidParams { .. } | Error::Config(_) => EXIT_INVALID,
        _ => 1,
    }
}
