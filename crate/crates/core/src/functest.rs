//! Product-specific functional tests (QC_FUNC_1, QC_FUNC_2).
//!
//! ```yaml
//! cloud-info-provider:
//!     qc_func_1:
//!         - test: "bin/bdii/client-test.sh"
//!           description: "GLUE2 ldapsearch check."
//!           args: "ldapsearch-site-bdii-cloud"
//! ```
//!
//! Paths are relative to the directory holding the definitions file. An
//! entry may carry `timeout` (seconds) to override the per-check limit.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;

use crate::context::RunContext;
use crate::error::{Error, Result};
use crate::exec::{self, ExecError, ExecRequest, Termination};
use crate::qc::{ids, CheckResult};

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestDefinition {
    pub test: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub args: String,
    #[serde(default)]
    pub timeout: Option<u64>,
}

impl TestDefinition {
    pub fn argv(&self) -> Vec<String> {
        self.args.split_whitespace().map(str::to_string).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TestSuite {
    pub id: String,
    pub qc_func_1: Vec<TestDefinition>,
    pub qc_func_2: Vec<TestDefinition>,
    pub root: PathBuf,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSuite {
    #[serde(default)]
    qc_func_1: Option<Vec<TestDefinition>>,
    #[serde(default)]
    qc_func_2: Option<Vec<TestDefinition>>,
}

pub fn load_test_definitions(path: &Path, id: &str) -> Result<TestSuite> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::TestDefinitionMissing(format!("{}: {e}", path.display())))?;
    let root = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    parse_test_definitions(&text, &path.display().to_string(), root, id)
}

pub fn parse_test_definitions(text: &str, label: &str, root: &Path, id: &str) -> Result<TestSuite> {
    let located = |e: serde_yaml::Error| {
        let (line, column) = e.location().map_or((1, 1), |l| (l.line(), l.column()));
        Error::Parse {
            path: label.to_string(),
            line,
            column,
            message: e.to_string(),
        }
    };
    let mut suites: BTreeMap<String, RawSuite> = serde_yaml::from_str(text).map_err(located)?;
    let Some(raw) = suites.remove(id) else {
        let mut available: Vec<String> = suites.into_keys().collect();
        available.sort();
        return Err(Error::UnknownSuite {
            id: id.to_string(),
            available,
        });
    };
    if raw.qc_func_1.is_none() && raw.qc_func_2.is_none() {
        return Err(Error::TestDefinitionMissing(format!("suite {id} declares neither qc_func_1 nor qc_func_2")));
    }
    let suite = TestSuite {
        id: id.to_string(),
        qc_func_1: raw.qc_func_1.unwrap_or_default(),
        qc_func_2: raw.qc_func_2.unwrap_or_default(),
        root: root.to_path_buf(),
    };
    if let Some(bad) = suite.qc_func_1.iter().chain(&suite.qc_func_2).find(|d| d.test.trim().is_empty()) {
        return Err(Error::TestDefinitionMissing(format!("suite {id}: empty test path ({:?})", bad.description)));
    }
    Ok(suite)
}

#[derive(Debug, Clone)]
pub struct TestOutcome {
    pub test: String,
    pub argv: Vec<String>,
    /// None when the script could not be started.
    pub termination: Option<Termination>,
    pub detail: String,
    pub output: String,
    pub duration: Duration,
    pub log_path: PathBuf,
}

impl TestOutcome {
    pub fn passed(&self) -> bool {
        self.termination == Some(Termination::Exited(0))
    }
}

/// Runs one script with cwd = suite root and whitespace-split args.
pub fn execute_test(def: &TestDefinition, root: &Path, ctx: &RunContext, log_path: &Path) -> TestOutcome {
    let script = if Path::new(&def.test).is_absolute() {
        PathBuf::from(&def.test)
    } else {
        root.join(&def.test)
    };
    let timeout = def.timeout.map(Duration::from_secs).unwrap_or(ctx.timeout_per_check);
    let argv = def.argv();
    let req = ExecRequest::new(&script, log_path)
        .args(argv.iter().cloned())
        .cwd(root)
        .env(ctx.exported_env())
        .timeout(timeout);
    let mut outcome = TestOutcome {
        test: def.test.clone(),
        argv,
        termination: None,
        detail: String::new(),
        output: String::new(),
        duration: Duration::ZERO,
        log_path: log_path.to_path_buf(),
    };
    match exec::run(&req) {
        Ok(out) => {
            outcome.detail = match out.termination {
                Termination::Exited(0) => "passed".into(),
                Termination::TimedOut => format!("timeout after {}s", timeout.as_secs()),
                _ => out.describe(),
            };
            outcome.termination = Some(out.termination);
            outcome.output = out.output;
            outcome.duration = out.duration;
        }
        Err(ExecError::NotFound(p)) => outcome.detail = format!("not found: {}", p.display()),
        Err(e) => outcome.detail = e.to_string(),
    }
    outcome
}

fn run_category(id: &str, defs: &[TestDefinition], suite: &TestSuite, ctx: &RunContext, first_index: usize) -> CheckResult {
    if defs.is_empty() {
        return CheckResult::not_applicable(id, format!("no {} tests declared", id.to_ascii_lowercase()));
    }
    let log_dir = ctx.workdir.join("tests").join(&suite.id);
    let mut lines = Vec::new();
    let mut logs = Vec::new();
    let mut all_passed = true;
    let mut total = 0.0;
    for (offset, def) in defs.iter().enumerate() {
        let log = log_dir.join(format!("{}.log", first_index + offset));
        let out = execute_test(def, &suite.root, ctx, &log);
        total += out.duration.as_secs_f64();
        all_passed &= out.passed();
        let label = if def.description.is_empty() {
            def.test.clone()
        } else {
            format!("{} ({})", def.test, def.description)
        };
        lines.push(format!("{} {label}: {}", if out.passed() { "PASS" } else { "FAIL" }, out.detail));
        if log.exists() {
            logs.push(log);
        }
    }
    let result = if all_passed {
        CheckResult::ok(id, lines.join("\n"))
    } else {
        CheckResult::fail(id, lines.join("\n"))
    };
    result.with_duration(total).with_artifacts(logs)
}

/// Both categories run regardless of each other's outcome.
pub fn run_suite(suite: &TestSuite, ctx: &RunContext) -> [CheckResult; 2] {
    [
        run_category(ids::QC_FUNC_1, &suite.qc_func_1, suite, ctx, 1),
        run_category(ids::QC_FUNC_2, &suite.qc_func_2, suite, ctx, 1 + suite.qc_func_1.len()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qc::CheckStatus;

    const LISTING: &str = "cloud-info-provider:\n    qc_func_1:\n        - test: \"bin/bdii/client-test.sh\"\n          description: \"GLUE2 ldapsearch check.\"\n          args: \"ldapsearch-site-bdii-cloud\"\n";

    #[test]
    fn listing_parses() {
        let suite = parse_test_definitions(LISTING, "t", Path::new("/s"), "cloud-info-provider").unwrap();
        assert_eq!(
            suite.qc_func_1,
            vec![TestDefinition {
                test: "bin/bdii/client-test.sh".into(),
                description: "GLUE2 ldapsearch check.".into(),
                args: "ldapsearch-site-bdii-cloud".into(),
                timeout: None,
            }]
        );
        assert!(suite.qc_func_2.is_empty());
    }

    #[test]
    fn unknown_id_lists_known_ones() {
        let err = parse_test_definitions(LISTING, "t", Path::new("/s"), "fts").unwrap_err();
        assert_eq!(err.to_string(), "unknown test suite 'fts'; available: cloud-info-provider");
    }

    #[test]
    fn entry_without_test_is_located() {
        let text = "x:\n  qc_func_1:\n    - description: d\n";
        match parse_test_definitions(text, "t", Path::new("/s"), "x") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let suite = parse_test_definitions("x:\n  qc_func_2:\n    - test: a.sh\n", "t", Path::new("/s"), "x").unwrap();
        assert_eq!(suite.qc_func_2[0].args, "");
    }

    #[test]
    fn categories_are_all_must_pass() {
        let dir = tempfile::tempdir().unwrap();
        exec::write_script(&dir.path().join("ok.sh"), "#!/bin/sh\nexit 0\n").unwrap();
        exec::write_script(&dir.path().join("bad.sh"), "#!/bin/sh\nexit 7\n").unwrap();
        let text = "s:\n  qc_func_1:\n    - test: ok.sh\n    - test: bad.sh\n  qc_func_2:\n    - test: ok.sh\n    - test: missing.sh\n";
        let suite = parse_test_definitions(text, "t", dir.path(), "s").unwrap();
        let ctx = RunContext::new("r", "centos7", dir.path());
        let [f1, f2] = run_suite(&suite, &ctx);
        assert_eq!(f1.status, CheckStatus::Fail);
        assert!(f1.detail.contains("exit status 7"));
        assert_eq!(f2.status, CheckStatus::Fail);
        assert!(f2.detail.contains("not found"));
        assert!(dir.path().join("tests/s/3.log").exists());
    }
}
