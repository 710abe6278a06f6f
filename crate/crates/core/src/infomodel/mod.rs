//! Published resource information (QC_INFO_1..3).
//!
//! The schema itself is judged by an external validator; this module only
//! fetches the LDIF, checks it is well formed and compares the published
//! middleware version with what was installed.

pub mod ldif;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Deserialize;

use crate::context::RunContext;
use crate::deploy::InstalledPackage;
use crate::error::{Error, Result};
use crate::exec::{self, ExecError, ExecRequest};
use crate::qc::{ids, CheckResult};

pub use ldif::{parse_ldif, write_ldif, LdifDocument, LdifEntry};

pub const DEFAULT_FETCH_COMMAND: &str = "ldapsearch -x -LLL -H ldap://{host}:{port} -b {base_dn}";
pub const DEFAULT_VALIDATOR: &str = "glue-validator {document}";
pub const DEFAULT_VERSION_ATTRIBUTE: &str = "GLUE2EntityOtherInfo";
pub const DEFAULT_VERSION_PREFIX: &str = "MiddlewareVersion=";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum GlueFlavor {
    #[serde(rename = "glue13")]
    Glue13,
    #[serde(rename = "glue2")]
    Glue2,
}

impl GlueFlavor {
    pub fn label(self) -> &'static str {
        match self {
            GlueFlavor::Glue13 => "glue13",
            GlueFlavor::Glue2 => "glue2",
        }
    }

    /// GLUE 1.3 maps to QC_INFO_1, GLUE 2.0 to QC_INFO_2.
    pub fn check_id(self) -> &'static str {
        match self {
            GlueFlavor::Glue13 => ids::QC_INFO_1,
            GlueFlavor::Glue2 => ids::QC_INFO_2,
        }
    }
}

fn default_port() -> u16 {
    2170
}
fn default_base_dn() -> String {
    "o=glue".into()
}
fn default_validator() -> String {
    DEFAULT_VALIDATOR.into()
}
fn default_flavors() -> Vec<GlueFlavor> {
    vec![GlueFlavor::Glue2]
}
fn default_attribute() -> String {
    DEFAULT_VERSION_ATTRIBUTE.into()
}
fn default_prefix() -> String {
    DEFAULT_VERSION_PREFIX.into()
}

/// `infomodel:` block of a product definition.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InfoModelConfig {
    /// Defaults to the run's hostname.
    #[serde(default)]
    pub host: Option<String>,
    #[serde(default = "default_port")]
    pub port: u16,
    #[serde(default = "default_base_dn")]
    pub base_dn: String,
    #[serde(default)]
    pub fetch_command: Option<String>,
    #[serde(default = "default_validator")]
    pub validator: String,
    #[serde(default = "default_flavors")]
    pub flavors: Vec<GlueFlavor>,
    #[serde(default = "default_attribute")]
    pub version_attribute: String,
    #[serde(default = "default_prefix")]
    pub version_prefix: String,
    /// Package whose version must be published; defaults to the product name.
    #[serde(default)]
    pub version_package: Option<String>,
}

impl Default for InfoModelConfig {
    fn default() -> Self {
        InfoModelConfig {
            host: None,
            port: default_port(),
            base_dn: default_base_dn(),
            fetch_command: None,
            validator: default_validator(),
            flavors: default_flavors(),
            version_attribute: default_attribute(),
            version_prefix: default_prefix(),
            version_package: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InfoEndpoint {
    pub host: String,
    pub port: u16,
    pub base_dn: String,
    pub fetch_command: Option<String>,
    /// Directory relative command paths resolve against.
    pub base_dir: PathBuf,
}

impl InfoEndpoint {
    pub fn validate(&self) -> Result<()> {
        if self.port == 0 {
            return Err(Error::InvalidProduct("information endpoint port must be in 1..65535".into()));
        }
        if self.base_dn.trim().is_empty() && self.fetch_command.is_none() {
            return Err(Error::InvalidProduct("information endpoint needs a base_dn".into()));
        }
        Ok(())
    }

    fn placeholders(&self, document: Option<&Path>) -> Vec<(&'static str, String)> {
        let mut vars = vec![
            ("host", self.host.clone()),
            ("port", self.port.to_string()),
            ("base_dn", self.base_dn.clone()),
        ];
        if let Some(doc) = document {
            vars.push(("document", doc.display().to_string()));
        }
        vars
    }
}

/// Splits `template` on whitespace, then substitutes `{name}` placeholders
/// inside each word, so substituted values never split into extra words.
pub fn expand_template(template: &str, vars: &[(&str, String)]) -> Vec<String> {
    template
        .split_whitespace()
        .map(|word| {
            vars.iter()
                .fold(word.to_string(), |w, (k, v)| w.replace(&format!("{{{k}}}"), v))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct FetchedInfo {
    pub document: LdifDocument,
    pub path: PathBuf,
}

/// Runs the fetch command (default `ldapsearch`) and parses its stdout.
/// The raw output is kept at `<workdir>/infomodel/published.ldif`.
pub fn fetch_info(endpoint: &InfoEndpoint, ctx: &RunContext) -> Result<FetchedInfo> {
    endpoint.validate()?;
    let dir = ctx.subdir("infomodel")?;
    let template = endpoint.fetch_command.as_deref().unwrap_or(DEFAULT_FETCH_COMMAND);
    let argv = expand_template(template, &endpoint.placeholders(None));
    let (program, args) = argv
        .split_first()
        .ok_or_else(|| Error::InvalidProduct("empty fetch_command".into()))?;
    let path = dir.join("published.ldif");
    let req = ExecRequest::new(program, dir.join("fetch.log"))
        .args(args.iter().cloned())
        .cwd(&endpoint.base_dir)
        .env(ctx.exported_env())
        .stdout_to(&path)
        .timeout(ctx.timeout_per_check);
    let out = exec::run(&req).map_err(|e| Error::InfoUnavailable(e.to_string()))?;
    if !out.success() {
        let stderr = out.excerpt(10);
        return Err(Error::InfoUnavailable(format!(
            "{}:{} fetch failed ({}){}{}",
            endpoint.host,
            endpoint.port,
            out.describe(),
            if stderr.is_empty() { "" } else { ": " },
            stderr
        )));
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let document = parse_ldif(&text)?;
    if document.entries.is_empty() {
        return Err(Error::NoPublishedInformation);
    }
    Ok(FetchedInfo { document, path })
}

/// Runs the schema validator for `flavor`. Only the exit status is
/// interpreted; the detail is the verbatim captured output.
pub fn run_external_validator(
    command: &str,
    document: &Path,
    flavor: GlueFlavor,
    endpoint: &InfoEndpoint,
    ctx: &RunContext,
) -> CheckResult {
    let id = flavor.check_id();
    let started = Instant::now();
    let mut vars = endpoint.placeholders(Some(document));
    vars.push(("flavor", flavor.label().to_string()));
    let argv = expand_template(command, &vars);
    let Some((program, args)) = argv.split_first() else {
        return CheckResult::fail(id, "validator unavailable: empty command");
    };
    let log = ctx.workdir.join("infomodel").join(format!("validator-{}.log", flavor.label()));
    let req = ExecRequest::new(program, &log)
        .args(args.iter().cloned())
        .cwd(&endpoint.base_dir)
        .env(ctx.exported_env())
        .timeout(ctx.timeout_per_check);
    let result = match exec::run(&req) {
        Err(e @ (ExecError::NotFound(_) | ExecError::NotExecutable(_))) => {
            CheckResult::fail(id, format!("validator unavailable: {e}"))
        }
        Err(e) => CheckResult::fail(id, e.to_string()),
        Ok(out) if out.success() => CheckResult::ok(id, out.output.trim_end()).with_artifacts([log]),
        Ok(out) => {
            let mut detail = out.describe();
            if !out.output.is_empty() {
                detail.push('\n');
                detail.push_str(out.output.trim_end());
            }
            CheckResult::fail(id, detail).with_artifacts([log])
        }
    };
    result.with_duration(started.elapsed().as_secs_f64())
}

/// Where the published version lives and which package it must match.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VersionProbe {
    pub attribute: String,
    pub prefix: String,
    pub package: String,
}

/// QC_INFO_3: some value of the version attribute equals the installed
/// version of the probed package (`version` or `version-release`).
pub fn check_middleware_version(
    document: &LdifDocument,
    installed: &[InstalledPackage],
    probe: &VersionProbe,
) -> CheckResult {
    let published: Vec<&str> = document
        .values(&probe.attribute)
        .filter_map(|v| v.strip_prefix(probe.prefix.as_str()))
        .map(str::trim)
        .collect();
    if published.is_empty() {
        return CheckResult::fail(ids::QC_INFO_3, "version not published");
    }
    let Some(pkg) = installed.iter().find(|p| p.name == probe.package) else {
        return CheckResult::fail(
            ids::QC_INFO_3,
            format!("package {} not installed (published {})", probe.package, published.join(", ")),
        );
    };
    let full = format!("{}-{}", pkg.version, pkg.release);
    if published.iter().any(|v| *v == pkg.version || *v == full) {
        CheckResult::ok(ids::QC_INFO_3, format!("published {} matches {}", pkg.version, pkg.name))
    } else {
        CheckResult::fail(
            ids::QC_INFO_3,
            format!("published {}, installed {} {}", published.join(", "), pkg.name, pkg.version),
        )
    }
}
