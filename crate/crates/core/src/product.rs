//! Declarative product definitions.
//!
//! ```yaml
//! name: fts
//! doc: File Transfer Service (FTS) deployment.
//! need_cert: true
//! cfgtool:
//!   type: puppet
//!   manifest: fts.pp
//!   hiera_data: [fts.yaml, fetchcrl.yaml]
//!   module:
//!     - [git://github.com/egi-qc/puppet-fts.git, umd]
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use serde_yaml::Value;

use crate::deploy::{BackendConfig, ModuleSource};
use crate::error::{Error, Result};
use crate::infomodel::InfoModelConfig;
use crate::qc::{find_check, ids};

/// Checks that only run as external scripts.
pub const PLUGGABLE_CHECKS: &[&str] = &[ids::QC_SEC_3, ids::QC_SEC_4, ids::QC_MON_1, ids::QC_ACC_1];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Hooks {
    pub pre_config: Option<PathBuf>,
    pub post_config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TlsEndpoint {
    #[serde(default)]
    pub host: Option<String>,
    pub port: u16,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProductSpec {
    pub name: String,
    pub doc: String,
    pub need_cert: bool,
    pub has_infomodel: bool,
    pub backend: BackendConfig,
    pub qc_specific_id: Option<String>,
    /// Ordered bindings; product-level first, then backend-level.
    pub extra_vars: Vec<(String, String)>,
    pub hooks: Hooks,
    pub external_checks: BTreeMap<String, PathBuf>,
    pub support_url: Option<String>,
    /// Scanned in addition to the install root by QC_SEC_5/6.
    pub scan_roots: Vec<PathBuf>,
    /// Overrides the default secret patterns when non-empty.
    pub secret_patterns: Vec<String>,
    pub tls_endpoint: Option<TlsEndpoint>,
    pub infomodel: Option<InfoModelConfig>,
    /// Directory relative paths in the definition resolve against.
    pub source_dir: PathBuf,
}

impl ProductSpec {
    pub fn new(name: impl Into<String>, backend: BackendConfig) -> Self {
        ProductSpec {
            name: name.into(),
            doc: String::new(),
            need_cert: false,
            has_infomodel: false,
            backend,
            qc_specific_id: None,
            extra_vars: Vec::new(),
            hooks: Hooks::default(),
            external_checks: BTreeMap::new(),
            support_url: None,
            scan_roots: Vec::new(),
            secret_patterns: Vec::new(),
            tls_endpoint: None,
            infomodel: None,
            source_dir: PathBuf::from("."),
        }
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.source_dir.join(path)
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    name: String,
    #[serde(default)]
    doc: String,
    #[serde(default)]
    need_cert: bool,
    #[serde(default)]
    has_infomodel: bool,
    #[serde(alias = "backend")]
    cfgtool: Value,
    #[serde(default)]
    qc_specific_id: Option<String>,
    #[serde(default)]
    extra_vars: Vec<Value>,
    #[serde(default)]
    hooks: RawHooks,
    #[serde(default)]
    external_checks: BTreeMap<String, PathBuf>,
    #[serde(default)]
    support_url: Option<String>,
    #[serde(default)]
    scan_roots: Vec<PathBuf>,
    #[serde(default)]
    secret_patterns: Vec<String>,
    #[serde(default)]
    tls: Option<TlsEndpoint>,
    #[serde(default)]
    infomodel: Option<InfoModelConfig>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct RawHooks {
    #[serde(default)]
    pre_config: Option<PathBuf>,
    #[serde(default)]
    post_config: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPuppet {
    manifest: String,
    #[serde(default)]
    hiera_data: Vec<String>,
    #[serde(default, alias = "module")]
    modules: Vec<RawModule>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawModule {
    Pair(String, String),
    Map { url: String, branch: String },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAnsible {
    role: String,
    checkout: String,
    #[serde(default)]
    tags: Vec<String>,
    #[serde(default)]
    extra_vars: Vec<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMock {
    #[serde(default)]
    outcome_manifest: Option<PathBuf>,
}

fn scalar(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.clone()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::Null => Some(String::new()),
        _ => None,
    }
}

/// Accepts `- key: value` maps and `"key: value"` strings.
fn parse_extra_var(value: &Value) -> Result<(String, String)> {
    match value {
        Value::Mapping(m) if m.len() == 1 => {
            let (k, v) = m.iter().next().expect("one entry");
            match (scalar(k), scalar(v)) {
                (Some(k), Some(v)) if !k.is_empty() => Ok((k, v)),
                _ => Err(Error::InvalidProduct(format!("extra_vars entry must map a key to a scalar: {value:?}"))),
            }
        }
        Value::String(s) => {
            let (k, v) = s
                .split_once(':')
                .ok_or_else(|| Error::InvalidProduct(format!("extra_vars entry '{s}' is not 'key: value'")))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::InvalidProduct(format!("extra_vars entry '{s}' has an empty key")));
            }
            Ok((k.to_string(), v.trim().to_string()))
        }
        other => Err(Error::InvalidProduct(format!("extra_vars entry must be 'key: value': {other:?}"))),
    }
}

fn push_vars(into: &mut Vec<(String, String)>, values: &[Value]) -> Result<()> {
    for v in values {
        let (k, val) = parse_extra_var(v)?;
        if into.iter().any(|(existing, _)| *existing == k) {
            return Err(Error::DuplicateExtraVar(k));
        }
        into.push((k, val));
    }
    Ok(())
}

fn check_url(url: &str, what: &str) -> Result<()> {
    url::Url::parse(url)
        .map(|_| ())
        .map_err(|e| Error::InvalidProduct(format!("{what} '{url}' is not a valid URL: {e}")))
}

/// Line (1-based) of the first top-level `key:` in `text`, for errors that
/// serde cannot place.
fn key_line(text: &str, keys: &[&str]) -> usize {
    text.lines()
        .position(|l| keys.iter().any(|k| l.starts_with(&format!("{k}:"))))
        .map_or(1, |i| i + 1)
}

fn backend_from(value: Value, product: &str, source_dir: &Path, text: &str, label: &str) -> Result<(BackendConfig, Vec<Value>)> {
    let located = |e: serde_yaml::Error| Error::Parse {
        path: label.to_string(),
        line: key_line(text, &["cfgtool", "backend"]),
        column: 1,
        message: format!("cfgtool: {e}"),
    };
    let (kind, mut body) = match value {
        Value::String(kind) => (kind, serde_yaml::Mapping::new()),
        Value::Mapping(mut m) => {
            let kind = match m.remove("type") {
                Some(Value::String(k)) => k,
                Some(_) => return Err(Error::InvalidProduct("cfgtool type must be a string".into())),
                None => return Err(Error::InvalidProduct("cfgtool needs a type".into())),
            };
            (kind, m)
        }
        _ => return Err(Error::InvalidProduct("cfgtool must be a mapping or a backend name".into())),
    };
    match kind.to_ascii_lowercase().as_str() {
        "puppet" => {
            let raw: RawPuppet = serde_yaml::from_value(Value::Mapping(body)).map_err(located)?;
            let modules = raw
                .modules
                .into_iter()
                .map(|m| match m {
                    RawModule::Pair(url, branch) | RawModule::Map { url, branch } => ModuleSource { url, branch },
                })
                .collect::<Vec<_>>();
            for m in &modules {
                check_url(&m.url, "module")?;
            }
            Ok((
                BackendConfig::Puppet {
                    manifest: raw.manifest,
                    hiera_data: raw.hiera_data,
                    modules,
                },
                Vec::new(),
            ))
        }
        "ansible" => {
            let raw: RawAnsible = serde_yaml::from_value(Value::Mapping(body)).map_err(located)?;
            check_url(&raw.role, "role")?;
            let mut vars = Vec::new();
            push_vars(&mut vars, &raw.extra_vars)?;
            Ok((
                BackendConfig::Ansible {
                    role: raw.role,
                    checkout: raw.checkout,
                    tags: raw.tags,
                    extra_vars: vars,
                },
                raw.extra_vars,
            ))
        }
        "mock" => {
            body.remove("extra_vars");
            let raw: RawMock = serde_yaml::from_value(Value::Mapping(body)).map_err(located)?;
            let manifest = raw.outcome_manifest.unwrap_or_else(|| PathBuf::from(format!("{product}.manifest")));
            let manifest = if manifest.is_absolute() {
                manifest
            } else {
                source_dir.join(manifest)
            };
            Ok((
                BackendConfig::Mock {
                    outcome_manifest: manifest,
                },
                Vec::new(),
            ))
        }
        other => Err(Error::UnknownBackend(other.to_string())),
    }
}

/// Parses a definition held in memory. `label` names it in errors and
/// `source_dir` anchors relative paths.
pub fn parse_product_spec(text: &str, label: &str, source_dir: &Path) -> Result<ProductSpec> {
    let raw: RawSpec = serde_yaml::from_str(text).map_err(|e| {
        let (line, column) = e.location().map_or((1, 1), |l| (l.line(), l.column()));
        Error::Parse {
            path: label.to_string(),
            line,
            column,
            message: e.to_string(),
        }
    })?;
    if raw.name.trim().is_empty() {
        return Err(Error::InvalidProduct("name must not be empty".into()));
    }
    let (backend, backend_vars) = backend_from(raw.cfgtool, &raw.name, source_dir, text, label)?;

    let mut extra_vars = Vec::new();
    push_vars(&mut extra_vars, &raw.extra_vars)?;
    push_vars(&mut extra_vars, &backend_vars)?;

    for id in raw.external_checks.keys() {
        if find_check(id).is_none() {
            return Err(Error::UnknownCheck(id.clone()));
        }
        if !PLUGGABLE_CHECKS.contains(&id.as_str()) {
            return Err(Error::InvalidProduct(format!(
                "{id} is built in; external scripts are accepted for {}",
                PLUGGABLE_CHECKS.join(", ")
            )));
        }
    }
    if let Some(url) = &raw.support_url {
        check_url(url, "support_url")?;
    }
    if let Some(tls) = &raw.tls {
        if tls.port == 0 {
            return Err(Error::InvalidProduct("tls port must be in 1..65535".into()));
        }
    }
    if let Some(info) = &raw.infomodel {
        if info.flavors.is_empty() {
            return Err(Error::InvalidProduct("infomodel flavors must not be empty".into()));
        }
    }

    let resolve = |p: PathBuf| if p.is_absolute() { p } else { source_dir.join(p) };
    Ok(ProductSpec {
        name: raw.name,
        doc: raw.doc,
        need_cert: raw.need_cert,
        has_infomodel: raw.has_infomodel,
        backend,
        qc_specific_id: raw.qc_specific_id,
        extra_vars,
        hooks: Hooks {
            pre_config: raw.hooks.pre_config.map(resolve),
            post_config: raw.hooks.post_config.map(resolve),
        },
        external_checks: raw.external_checks.into_iter().map(|(k, v)| (k, resolve(v))).collect(),
        support_url: raw.support_url,
        scan_roots: raw.scan_roots,
        secret_patterns: raw.secret_patterns,
        tls_endpoint: raw.tls,
        infomodel: raw.infomodel,
        source_dir: source_dir.to_path_buf(),
    })
}

pub fn load_product_spec(path: &Path) -> Result<ProductSpec> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let dir = dir.canonicalize().unwrap_or_else(|_| dir.to_path_buf());
    parse_product_spec(&text, &path.display().to_string(), &dir)
}

/// Product definitions in `dir` (`*.yaml`, `*.yml`), sorted by file name.
/// Files that fail to load are returned with their error.
pub fn list_products(dir: &Path) -> Result<Vec<(PathBuf, Result<ProductSpec>)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(format!("reading {}", dir.display()), e))?
        .flatten()
        .map(|e| e.path())
        .filter(|p| matches!(p.extension().and_then(|s| s.to_str()), Some("yaml" | "yml")))
        .collect();
    paths.sort();
    Ok(paths
        .into_iter()
        .map(|p| {
            let spec = load_product_spec(&p);
            (p, spec)
        })
        .collect())
}
