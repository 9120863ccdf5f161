//! Report rendering and output sinks.
//!
//! JSON reports follow the schema
//! `{scope, pass, cases: [{input, expected, observed, fidelity}], duration_ms}`
//! (an array of such objects when a command runs several scopes). With fixed
//! seed and flags the output is byte-identical except for `duration_ms`.

use std::io::Write;
use std::path::Path;

use hyperghz::oracle::VerificationReport;

use crate::{CliError, Format};

pub fn render(reports: &[VerificationReport], format: Format) -> Result<String, CliError> {
    match format {
        Format::Text => Ok(render_text(reports)),
        Format::Json => render_json(reports),
        Format::Csv => Ok(render_csv(reports)),
    }
}

fn render_text(reports: &[VerificationReport]) -> String {
    let mut out = String::new();
    for report in reports {
        let passed = report.cases.iter().filter(|c| c.pass()).count();
        out.push_str(&format!(
            "[{}] {} — {}/{} cases in {} ms\n",
            if report.pass { "PASS" } else { "FAIL" },
            report.scope,
            passed,
            report.cases.len(),
            report.duration_ms
        ));
        for case in report.failures() {
            out.push_str(&format!(
                "  FAIL {}: expected {}, observed {}{}\n",
                case.input,
                case.expected,
                case.observed,
                match case.fidelity {
                    Some(f) => format!(" (fidelity {f:.12})"),
                    None => String::new(),
                }
            ));
        }
    }
    out
}

fn render_json(reports: &[VerificationReport]) -> Result<String, CliError> {
    let mut text = if reports.len() == 1 {
        serde_json::to_string_pretty(&reports[0])
    } else {
        serde_json::to_string_pretty(reports)
    }
    .map_err(|e| CliError::Internal(format!("json encoding failed: {e}")))?;
    text.push('\n');
    Ok(text)
}

fn render_csv(reports: &[VerificationReport]) -> String {
    let mut out = String::from("scope,pass,input,expected,observed,fidelity\n");
    for report in reports {
        for case in &report.cases {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                csv_field(&report.scope),
                case.pass(),
                csv_field(&case.input),
                csv_field(&case.expected),
                csv_field(&case.observed),
                case.fidelity.map(|f| format!("{f}")).unwrap_or_default()
            ));
        }
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Writes to `--out` when given, otherwise to stdout.
pub fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => {
            std::fs::write(path, text)
                .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Internal(format!("stdout: {e}")))?;
        }
    }
    Ok(())
}
