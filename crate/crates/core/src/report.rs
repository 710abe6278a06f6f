//! Report rendering, persistence and exit-code mapping.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qc::{find_check, CheckResult, CheckStatus, Mode, ValidationReport, Verdict};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_USAGE: i32 = 64;
pub const EXIT_INTERNAL: i32 = 70;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReportFormat {
    Text,
    Json,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Text => "txt",
            ReportFormat::Json => "json",
        }
    }
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "text" | "txt" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format '{other}' (expected text or json)")),
        }
    }
}

pub fn exit_code(verdict: Verdict) -> i32 {
    match verdict {
        Verdict::Ok => 0,
        Verdict::Warning => 1,
        Verdict::Fail => 2,
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonResult {
    id: String,
    status: String,
    critical: bool,
    duration_s: f64,
    detail: String,
    artifacts: Vec<String>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonReport {
    schema_version: u32,
    product: String,
    release: String,
    os: String,
    repositories: Vec<String>,
    started: String,
    finished: String,
    mode: String,
    results: Vec<JsonResult>,
    verdict: String,
}

fn timestamp(t: &DateTime<Utc>) -> String {
    t.to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn millis(seconds: f64) -> f64 {
    (seconds * 1000.0).round() / 1000.0
}

pub fn render_json(report: &ValidationReport) -> String {
    let doc = JsonReport {
        schema_version: SCHEMA_VERSION,
        product: report.product.clone(),
        release: report.release.clone(),
        os: report.os.clone(),
        repositories: report.repositories.clone(),
        started: timestamp(&report.started),
        finished: timestamp(&report.finished),
        mode: report.mode.label().into(),
        results: report
            .results
            .iter()
            .map(|r| JsonResult {
                id: r.check_id.clone(),
                status: r.status.label().into(),
                critical: find_check(&r.check_id).is_some_and(|d| d.critical),
                duration_s: millis(r.duration),
                detail: r.detail.clone(),
                artifacts: r.artifacts.iter().map(|a| a.display().to_string()).collect(),
            })
            .collect(),
        verdict: report.verdict.label().into(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("report serializes");
    out.push('\n');
    out
}

pub fn parse_report_json(text: &str) -> Result<ValidationReport> {
    let bad = |m: String| Error::InvalidReport(m);
    let doc: JsonReport = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(bad(format!("unsupported schema_version {}", doc.schema_version)));
    }
    let time = |s: &str| {
        DateTime::parse_from_rfc3339(s)
            .map(|t| t.with_timezone(&Utc))
            .map_err(|e| bad(format!("timestamp {s}: {e}")))
    };
    let mut results = Vec::with_capacity(doc.results.len());
    for r in doc.results {
        let status = CheckStatus::from_label(&r.status).ok_or_else(|| bad(format!("status {}", r.status)))?;
        results.push(
            CheckResult::new(&r.id, status, r.detail)
                .with_duration(r.duration_s)
                .with_artifacts(r.artifacts.into_iter().map(PathBuf::from)),
        );
    }
    Ok(ValidationReport {
        product: doc.product,
        release: doc.release,
        os: doc.os,
        repositories: doc.repositories,
        started: time(&doc.started)?,
        finished: time(&doc.finished)?,
        mode: doc.mode.parse::<Mode>().map_err(bad)?,
        results,
        verdict: Verdict::from_label(&doc.verdict).ok_or_else(|| bad(format!("verdict {}", doc.verdict)))?,
    })
}

pub fn render_text(report: &ValidationReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "product:  {}", report.product);
    let _ = writeln!(out, "release:  {}", report.release);
    let _ = writeln!(out, "os:       {}", report.os);
    let _ = writeln!(out, "mode:     {}", report.mode.label());
    if !report.repositories.is_empty() {
        let _ = writeln!(out, "repos:    {}", report.repositories.join(", "));
    }
    let _ = writeln!(out, "started:  {}", timestamp(&report.started));
    let _ = writeln!(out, "finished: {}", timestamp(&report.finished));
    out.push('\n');

    let id_w = report.results.iter().map(|r| r.check_id.len() + 1).max().unwrap_or(0).max("CHECK".len());
    let durations: Vec<String> = report.results.iter().map(|r| format!("{:.3}s", r.duration)).collect();
    let dur_w = durations.iter().map(String::len).max().unwrap_or(0).max("TIME".len());
    let status_w = "WARNING".len();
    let indent = id_w + status_w + dur_w + 6;
    let _ = writeln!(out, "{:<id_w$}  {:<status_w$}  {:>dur_w$}  DETAIL", "CHECK", "STATUS", "TIME");
    for (r, dur) in report.results.iter().zip(&durations) {
        let critical = if find_check(&r.check_id).is_some_and(|d| d.critical) { "*" } else { "" };
        let id = format!("{}{critical}", r.check_id);
        let mut lines = r.detail.lines();
        let first = lines.next().unwrap_or("");
        let _ = writeln!(out, "{id:<id_w$}  {:<status_w$}  {dur:>dur_w$}  {first}", r.status.label());
        for line in lines {
            let _ = writeln!(out, "{:indent$}{line}", "");
        }
    }
    let _ = writeln!(out, "\n* critical\n");
    let _ = writeln!(out, "VERDICT: {}", report.verdict.label());
    out
}

pub fn render_report(report: &ValidationReport, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Text => render_text(report),
        ReportFormat::Json => render_json(report),
    }
    .into_bytes()
}

fn sanitize(part: &str) -> String {
    part.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "._+-".contains(c) { c } else { '_' })
        .collect()
}

/// `<product>-<release>-<os>-<timestamp>` with a `-N` suffix when any
/// format's file already exists.
pub fn report_stem(report: &ValidationReport, dir: &Path, formats: &[ReportFormat]) -> String {
    let base = format!(
        "{}-{}-{}-{}",
        sanitize(&report.product),
        sanitize(&report.release),
        sanitize(&report.os),
        report.started.format("%Y%m%dT%H%M%S%3fZ")
    );
    let taken = |stem: &str| formats.iter().any(|f| dir.join(format!("{stem}.{}", f.extension())).exists());
    if !taken(&base) {
        return base;
    }
    (1..).map(|n| format!("{base}-{n}")).find(|s| !taken(s)).expect("unbounded range")
}

/// Writes each format. Files are created exclusively so concurrent writers
/// sharing a directory never clobber each other.
pub fn write_reports(report: &ValidationReport, dir: &Path, formats: &[ReportFormat]) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    'attempt: loop {
        let stem = report_stem(report, dir, formats);
        let mut written = Vec::new();
        for &format in formats {
            let path = dir.join(format!("{stem}.{}", format.extension()));
            let file = fs::OpenOptions::new().write(true).create_new(true).open(&path);
            let mut file = match file {
                Ok(f) => f,
                Err(e) if e.kind() == io::ErrorKind::AlreadyExists => {
                    for p in &written {
                        let _ = fs::remove_file(p);
                    }
                    continue 'attempt;
                }
                Err(e) => return Err(Error::io(format!("creating {}", path.display()), e)),
            };
            file.write_all(&render_report(report, format))
                .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
            written.push(path);
        }
        return Ok(written);
    }
}
