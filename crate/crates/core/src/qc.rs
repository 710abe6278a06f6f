//! Quality-criteria registry, check results and verdict aggregation.
//!
//! The registry is a fixed table of the 21 quality requirements. Every
//! result emitted anywhere in the crate refers to one of these ids, and the
//! aggregate verdict of a run is derived from the statuses of those results
//! together with the criticality recorded here.

use std::fmt;
use std::path::PathBuf;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Requirement category, in table order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Category {
    Documentation,
    Installation,
    Security,
    InformationModel,
    Operations,
    Support,
    SpecificQC,
}

/// One quality requirement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QcCheckDescriptor {
    pub id: &'static str,
    pub category: Category,
    pub description: &'static str,
    pub critical: bool,
    pub automated: bool,
}

pub mod ids {
    pub const QC_DOC_1: &str = "QC_DOC_1";
    pub const QC_DOC_2: &str = "QC_DOC_2";
    pub const QC_DOC_3: &str = "QC_DOC_3";
    pub const QC_DOC_4: &str = "QC_DOC_4";
    pub const QC_DOC_5: &str = "QC_DOC_5";
    pub const QC_DIST_1: &str = "QC_DIST_1";
    pub const QC_UPGRADE_1: &str = "QC_UPGRADE_1";
    pub const QC_SEC_1: &str = "QC_SEC_1";
    pub const QC_SEC_2: &str = "QC_SEC_2";
    pub const QC_SEC_3: &str = "QC_SEC_3";
    pub const QC_SEC_4: &str = "QC_SEC_4";
    pub const QC_SEC_5: &str = "QC_SEC_5";
    pub const QC_SEC_6: &str = "QC_SEC_6";
    pub const QC_INFO_1: &str = "QC_INFO_1";
    pub const QC_INFO_2: &str = "QC_INFO_2";
    pub const QC_INFO_3: &str = "QC_INFO_3";
    pub const QC_MON_1: &str = "QC_MON_1";
    pub const QC_ACC_1: &str = "QC_ACC_1";
    pub const QC_SUPPORT_1: &str = "QC_SUPPORT_1";
    pub const QC_FUNC_1: &str = "QC_FUNC_1";
    pub const QC_FUNC_2: &str = "QC_FUNC_2";
}

const fn qc(
    id: &'static str,
    category: Category,
    description: &'static str,
    critical: bool,
    automated: bool,
) -> QcCheckDescriptor {
    QcCheckDescriptor {
        id,
        category,
        description,
        critical,
        automated,
    }
}

use Category::*;

static REGISTRY: [QcCheckDescriptor; 21] = [
    qc(ids::QC_DOC_1, Documentation, "Release notes provisioning", true, false),
    qc(ids::QC_DOC_2, Documentation, "User documentation", true, false),
    qc(ids::QC_DOC_3, Documentation, "API documentation", false, false),
    qc(ids::QC_DOC_4, Documentation, "Admin documentation", true, false),
    qc(ids::QC_DOC_5, Documentation, "Software license", true, true),
    qc(ids::QC_DIST_1, Installation, "Binary distribution (RPM, DEB)", true, true),
    qc(ids::QC_UPGRADE_1, Installation, "Upgrade previous working version", false, true),
    qc(ids::QC_SEC_1, Security, "X.509 certificate support", true, true),
    qc(ids::QC_SEC_2, Security, "SHA-2 certificate support", true, true),
    qc(ids::QC_SEC_3, Security, "RFC proxy support", false, true),
    qc(ids::QC_SEC_4, Security, "ARGUS auth integration", false, true),
    qc(ids::QC_SEC_5, Security, "World writable files", true, true),
    qc(ids::QC_SEC_6, Security, "Passwords in world readable files", true, true),
    qc(ids::QC_INFO_1, InformationModel, "GLUE schema 1.3 support", false, true),
    qc(ids::QC_INFO_2, InformationModel, "GLUE schema 2.0 support", true, true),
    qc(ids::QC_INFO_3, InformationModel, "Middleware version", false, true),
    qc(ids::QC_MON_1, Operations, "Service probes", false, true),
    qc(ids::QC_ACC_1, Operations, "Accounting records", true, true),
    qc(ids::QC_SUPPORT_1, Support, "Bug tracking system", true, true),
    qc(ids::QC_FUNC_1, SpecificQC, "Basic functionality test", true, true),
    qc(ids::QC_FUNC_2, SpecificQC, "New feature/bug fixes test", false, true),
];

/// The built-in registry, in table order.
pub fn builtin_qc_registry() -> &'static [QcCheckDescriptor] {
    &REGISTRY
}

/// Looks up a descriptor in the built-in registry.
pub fn find_check(id: &str) -> Option<&'static QcCheckDescriptor> {
    REGISTRY.iter().find(|d| d.id == id)
}

/// Position of `id` in registry order.
pub fn registry_position(id: &str) -> Option<usize> {
    REGISTRY.iter().position(|d| d.id == id)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckStatus {
    Ok,
    Warning,
    Fail,
    NotApplicable,
}

impl CheckStatus {
    pub fn label(self) -> &'static str {
        match self {
            CheckStatus::Ok => "OK",
            CheckStatus::Warning => "WARNING",
            CheckStatus::Fail => "FAIL",
            CheckStatus::NotApplicable => "NA",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Some(match label {
            "OK" => CheckStatus::Ok,
            "WARNING" => CheckStatus::Warning,
            "FAIL" => CheckStatus::Fail,
            "NA" => CheckStatus::NotApplicable,
            _ => return None,
        })
    }
}

impl fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Aggregate outcome of a run. Ordered from best to worst.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Ok,
    Warning,
    Fail,
}

impl Verdict {
    pub fn label(self) -> &'static str {
        match self {
            Verdict::Ok => "OK",
            Verdict::Warning => "WARNING",
            Verdict::Fail => "FAIL",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        Some(match label {
            "OK" => Verdict::Ok,
            "WARNING" => Verdict::Warning,
            "FAIL" => Verdict::Fail,
            _ => return None,
        })
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Outcome of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub check_id: String,
    pub status: CheckStatus,
    pub detail: String,
    /// Elapsed seconds.
    pub duration: f64,
    /// Produced files, relative to the run's workdir when they live inside it.
    pub artifacts: Vec<PathBuf>,
}

impl CheckResult {
    pub fn new(check_id: &str, status: CheckStatus, detail: impl Into<String>) -> Self {
        CheckResult {
            check_id: check_id.to_string(),
            status,
            detail: detail.into(),
            duration: 0.0,
            artifacts: Vec::new(),
        }
    }

    pub fn ok(check_id: &str, detail: impl Into<String>) -> Self {
        Self::new(check_id, CheckStatus::Ok, detail)
    }

    pub fn fail(check_id: &str, detail: impl Into<String>) -> Self {
        Self::new(check_id, CheckStatus::Fail, detail)
    }

    pub fn warning(check_id: &str, detail: impl Into<String>) -> Self {
        Self::new(check_id, CheckStatus::Warning, detail)
    }

    pub fn not_applicable(check_id: &str, reason: impl Into<String>) -> Self {
        Self::new(check_id, CheckStatus::NotApplicable, reason)
    }

    pub fn with_duration(mut self, seconds: f64) -> Self {
        self.duration = seconds.max(0.0);
        self
    }

    pub fn with_artifacts(mut self, artifacts: impl IntoIterator<Item = PathBuf>) -> Self {
        self.artifacts.extend(artifacts);
        self
    }

    /// True when this result is a failure of a critical requirement.
    pub fn is_critical_failure(&self) -> bool {
        self.status == CheckStatus::Fail && find_check(&self.check_id).is_some_and(|d| d.critical)
    }
}

/// Execution mode of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Live,
    Mock,
}

impl Mode {
    pub fn label(self) -> &'static str {
        match self {
            Mode::Live => "live",
            Mode::Mock => "mock",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "live" => Ok(Mode::Live),
            "mock" => Ok(Mode::Mock),
            other => Err(format!("unknown mode '{other}' (expected live or mock)")),
        }
    }
}

/// Full outcome of one product validation.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub product: String,
    pub release: String,
    pub os: String,
    pub repositories: Vec<String>,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
    pub mode: Mode,
    pub results: Vec<CheckResult>,
    pub verdict: Verdict,
}

impl ValidationReport {
    pub fn result(&self, id: &str) -> Option<&CheckResult> {
        self.results.iter().find(|r| r.check_id == id)
    }
}

/// Criticality-aware aggregation.
///
/// Fail iff some critical requirement failed; Warning iff some non-critical
/// requirement failed or any check warned; Ok otherwise. NotApplicable
/// results do not contribute.
pub fn aggregate_verdict(results: &[CheckResult], registry: &[QcCheckDescriptor]) -> Result<Verdict> {
    let mut verdict = Verdict::Ok;
    for result in results {
        let descriptor = registry
            .iter()
            .find(|d| d.id == result.check_id)
            .ok_or_else(|| Error::UnknownCheck(result.check_id.clone()))?;
        let contribution = match result.status {
            CheckStatus::Fail if descriptor.critical => Verdict::Fail,
            CheckStatus::Fail | CheckStatus::Warning => Verdict::Warning,
            CheckStatus::Ok | CheckStatus::NotApplicable => Verdict::Ok,
        };
        verdict = verdict.max(contribution);
    }
    Ok(verdict)
}
