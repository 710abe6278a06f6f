//! Deployment backends and the installation checks (QC_DIST_1, QC_UPGRADE_1).
//!
//! A backend is prepared once (tool lookup, module checkout, parameter
//! files) and then executed. Live backends shell out to Puppet or Ansible;
//! the mock backend materializes an outcome manifest under the workdir so a
//! whole pipeline can run without root or network.

pub mod live;
pub mod manifest;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::context::RunContext;
use crate::error::{Error, Result};
use crate::exec::{self, ExecRequest, Termination};
use crate::qc::{ids, CheckResult, Mode};
use crate::repo::{compute_closure, Evr, Flavor, RepoIndex};

pub use manifest::{materialize, parse_mock_manifest, MockEntry, MockManifest};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ModuleSource {
    pub url: String,
    pub branch: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendConfig {
    Puppet {
        manifest: String,
        hiera_data: Vec<String>,
        modules: Vec<ModuleSource>,
    },
    Ansible {
        role: String,
        checkout: String,
        tags: Vec<String>,
        extra_vars: Vec<(String, String)>,
    },
    Mock {
        outcome_manifest: PathBuf,
    },
}

impl BackendConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            BackendConfig::Puppet { .. } => "puppet",
            BackendConfig::Ansible { .. } => "ansible",
            BackendConfig::Mock { .. } => "mock",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct InstalledPackage {
    pub name: String,
    pub epoch: u64,
    pub version: String,
    pub release: String,
    pub arch: String,
    pub license: Option<String>,
}

impl InstalledPackage {
    pub fn evr(&self) -> Evr {
        Evr::new(self.epoch, self.version.clone(), self.release.clone())
    }
}

impl fmt::Display for InstalledPackage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}.{}", self.name, self.evr(), self.arch)
    }
}

#[derive(Debug, Clone)]
pub struct DeploymentOutcome {
    pub exit_status: i32,
    pub installed_packages: Vec<InstalledPackage>,
    pub log_path: PathBuf,
    pub install_root: PathBuf,
    /// How the backend ended ("exit status 2", "timeout after 600s").
    pub termination: String,
    pub output: String,
}

impl DeploymentOutcome {
    pub fn succeeded(&self) -> bool {
        self.exit_status == 0
    }
}

#[derive(Debug, Clone)]
enum Prepared {
    Mock(MockManifest),
    Puppet { manifest: PathBuf, modulepath: PathBuf, hiera: PathBuf },
    Ansible { playbook: PathBuf, tags: Vec<String> },
}

/// Result of [`prepare_environment`], consumed by [`execute_deployment`].
#[derive(Debug, Clone)]
pub struct PreparedEnvironment {
    pub backend: &'static str,
    pub params_file: PathBuf,
    pub log_path: PathBuf,
    pub install_root: PathBuf,
    prepared: Prepared,
}

impl PreparedEnvironment {
    pub fn mock_manifest(&self) -> Option<&MockManifest> {
        match &self.prepared {
            Prepared::Mock(m) => Some(m),
            _ => None,
        }
    }
}

fn write_params(dir: &Path, vars: &[(String, String)]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let mut map = serde_yaml::Mapping::new();
    for (k, v) in vars {
        map.insert(k.clone().into(), v.clone().into());
    }
    let text = serde_yaml::to_string(&map).map_err(|e| Error::InvalidProduct(e.to_string()))?;
    let path = dir.join("extra_vars.yaml");
    fs::write(&path, text).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    Ok(path)
}

fn require_tool(name: &str) -> Result<PathBuf> {
    exec::find_in_path(name).ok_or_else(|| Error::BackendUnavailable(format!("{name} not found in PATH")))
}

fn checkout_name(url: &str) -> String {
    let last = url.trim_end_matches('/').rsplit('/').next().unwrap_or("module");
    last.strip_suffix(".git").unwrap_or(last).to_string()
}

fn clone(git: &Path, src: &ModuleSource, dest: &Path, ctx: &RunContext, n: usize) -> Result<()> {
    let req = ExecRequest::new(git, ctx.workdir.join("deploy").join(format!("clone-{n}.log")))
        .args(live::git_clone_args(&src.url, &src.branch, dest))
        .timeout(ctx.timeout_per_check);
    let out = exec::run(&req)?;
    if out.success() {
        Ok(())
    } else {
        Err(Error::BackendUnavailable(format!(
            "cannot fetch {} at branch {}: {}\n{}",
            src.url,
            src.branch,
            out.describe(),
            out.excerpt(10)
        )))
    }
}

/// Verifies tools, fetches module sources and writes parameter files.
/// `extra_vars` is the full ordered binding list (product plus hooks).
pub fn prepare_environment(
    cfg: &BackendConfig,
    extra_vars: &[(String, String)],
    ctx: &RunContext,
) -> Result<PreparedEnvironment> {
    ctx.check_workdir()?;
    let params_dir = ctx.subdir("params")?;
    let params_file = write_params(&params_dir, extra_vars)?;
    let log_path = ctx.subdir("deploy")?.join("deploy.log");

    let (prepared, install_root) = match cfg {
        BackendConfig::Mock { outcome_manifest } => {
            if !outcome_manifest.is_file() {
                return Err(Error::BackendUnavailable(format!(
                    "outcome manifest {} not found",
                    outcome_manifest.display()
                )));
            }
            (Prepared::Mock(parse_mock_manifest(outcome_manifest)?), ctx.workdir.join("root"))
        }
        _ if ctx.mode == Mode::Mock => {
            return Err(Error::BackendUnavailable(format!(
                "{} backend needs live mode (mock mode forbids privileged deployment)",
                cfg.kind()
            )));
        }
        BackendConfig::Puppet {
            manifest,
            hiera_data,
            modules,
        } => {
            let git = require_tool("git")?;
            require_tool("puppet")?;
            let modulepath = ctx.subdir("modules")?;
            let mut dirs = Vec::new();
            for (n, src) in modules.iter().enumerate() {
                let dest = modulepath.join(checkout_name(&src.url));
                clone(&git, src, &dest, ctx, n)?;
                dirs.push(dest);
            }
            let manifest_path = dirs
                .iter()
                .flat_map(|d| [d.join("manifests").join(manifest), d.join(manifest)])
                .find(|p| p.is_file())
                .ok_or_else(|| Error::BackendUnavailable(format!("manifest {manifest} not found in modules")))?;
            let hiera = params_dir.join("hiera.yaml");
            let refs: Vec<&Path> = dirs.iter().map(PathBuf::as_path).collect();
            fs::write(&hiera, live::hiera_config(&params_dir, &refs, hiera_data))
                .map_err(|e| Error::io(format!("writing {}", hiera.display()), e))?;
            (
                Prepared::Puppet {
                    manifest: manifest_path,
                    modulepath,
                    hiera,
                },
                PathBuf::from("/"),
            )
        }
        BackendConfig::Ansible { role, checkout, tags, .. } => {
            let git = require_tool("git")?;
            require_tool("ansible-playbook")?;
            let dest = ctx.subdir("roles")?.join(checkout_name(role));
            let src = ModuleSource {
                url: role.clone(),
                branch: checkout.clone(),
            };
            clone(&git, &src, &dest, ctx, 0)?;
            let playbook = params_dir.join("site.yml");
            fs::write(&playbook, live::ansible_playbook(&dest))
                .map_err(|e| Error::io(format!("writing {}", playbook.display()), e))?;
            (
                Prepared::Ansible {
                    playbook,
                    tags: tags.clone(),
                },
                PathBuf::from("/"),
            )
        }
    };
    Ok(PreparedEnvironment {
        backend: cfg.kind(),
        params_file,
        log_path,
        install_root,
        prepared,
    })
}

/// Runs the prepared backend. A nonzero backend status is an outcome, not
/// an error; errors are reserved for the engine failing to run it at all.
pub fn execute_deployment(
    handle: &PreparedEnvironment,
    ctx: &RunContext,
    env: &[(String, String)],
) -> Result<DeploymentOutcome> {
    match &handle.prepared {
        Prepared::Mock(manifest) => {
            if manifest.exit_status == 0 && manifest.packages.is_empty() {
                return Err(Error::EmptyManifest);
            }
            let mut log = format!("$ mock-deploy {}\n", manifest.source.display());
            for line in &manifest.log {
                log.push_str(line);
                log.push('\n');
            }
            if manifest.exit_status == 0 {
                materialize(manifest, &handle.install_root)?;
            }
            log.push_str(&format!("exit {}\n", manifest.exit_status));
            fs::write(&handle.log_path, &log)
                .map_err(|e| Error::io(format!("writing {}", handle.log_path.display()), e))?;
            Ok(DeploymentOutcome {
                exit_status: manifest.exit_status,
                installed_packages: if manifest.exit_status == 0 {
                    manifest.packages.clone()
                } else {
                    Vec::new()
                },
                log_path: handle.log_path.clone(),
                install_root: handle.install_root.clone(),
                termination: format!("exit status {}", manifest.exit_status),
                output: log,
            })
        }
        Prepared::Puppet {
            manifest,
            modulepath,
            hiera,
        } => {
            let args = live::puppet_apply_args(modulepath, hiera, manifest);
            run_live(handle, ctx, env, "puppet", args)
        }
        Prepared::Ansible { playbook, tags } => {
            let args = live::ansible_playbook_args(playbook, tags, &handle.params_file);
            run_live(handle, ctx, env, "ansible-playbook", args)
        }
    }
}

fn run_live(
    handle: &PreparedEnvironment,
    ctx: &RunContext,
    env: &[(String, String)],
    tool: &str,
    args: Vec<String>,
) -> Result<DeploymentOutcome> {
    let mut req = ExecRequest::new(tool, &handle.log_path)
        .args(args)
        .cwd(&ctx.workdir)
        .env(ctx.exported_env())
        .env(env.iter().cloned())
        .timeout(ctx.timeout_per_check);
    req = req.clone().preamble(format!("$ {}", req.command_line()));
    let out = exec::run(&req)?;
    let exit_status = match out.termination {
        Termination::Exited(code) => code,
        Termination::Signaled(sig) => 128 + sig,
        Termination::TimedOut => -1,
    };
    let installed_packages = if exit_status == 0 {
        query_installed(ctx)?
    } else {
        Vec::new()
    };
    Ok(DeploymentOutcome {
        exit_status,
        installed_packages,
        log_path: handle.log_path.clone(),
        install_root: handle.install_root.clone(),
        termination: out.describe(),
        output: out.output,
    })
}

fn query_installed(ctx: &RunContext) -> Result<Vec<InstalledPackage>> {
    let (tool, args) = live::package_query(ctx.flavor);
    let dir = ctx.subdir("deploy")?;
    let req = ExecRequest::new(tool, dir.join("package-query.log"))
        .args(args)
        .stdout_to(dir.join("package-query.out"))
        .timeout(ctx.timeout_per_check);
    let out = exec::run(&req)?;
    if !out.success() {
        return Err(Error::BackendUnavailable(format!("{tool} query failed: {}", out.describe())));
    }
    let text = fs::read_to_string(dir.join("package-query.out")).unwrap_or_default();
    Ok(live::parse_package_query(ctx.flavor, &text))
}

/// QC_DIST_1: the deployment succeeded and the candidate set is closed over
/// the candidate plus base repositories.
pub fn check_binary_distribution(outcome: &DeploymentOutcome, candidate: &RepoIndex, base: &[RepoIndex]) -> CheckResult {
    let started = Instant::now();
    let result = if !outcome.succeeded() {
        let excerpt = exec::excerpt(&outcome.output, 20);
        CheckResult::fail(ids::QC_DIST_1, format!("deployment failed ({})\n{excerpt}", outcome.termination))
    } else if candidate.packages.is_empty() {
        CheckResult::fail(ids::QC_DIST_1, "no candidate packages found")
    } else {
        match compute_closure(candidate, base) {
            Err(e) => CheckResult::fail(ids::QC_DIST_1, e.to_string()),
            Ok(unmet) if unmet.is_empty() => CheckResult::ok(
                ids::QC_DIST_1,
                format!(
                    "{} candidate packages installable; {} packages deployed",
                    candidate.packages.len(),
                    outcome.installed_packages.len()
                ),
            ),
            Ok(unmet) => {
                let lines: Vec<String> = unmet
                    .iter()
                    .map(|u| format!("unmet: {} requires {}", u.requiring, u.constraint))
                    .collect();
                CheckResult::fail(ids::QC_DIST_1, lines.join("\n"))
            }
        }
    };
    result.with_duration(started.elapsed().as_secs_f64())
}

fn newest(index: &RepoIndex) -> BTreeMap<&str, &Evr> {
    let mut best: BTreeMap<&str, &Evr> = BTreeMap::new();
    for p in &index.packages {
        best.entry(p.name.as_str())
            .and_modify(|cur| {
                if p.evr.compare(cur, index.flavor).is_gt() {
                    *cur = &p.evr;
                }
            })
            .or_insert(&p.evr);
    }
    best
}

/// QC_UPGRADE_1 by version comparison: for every name shipped by both
/// repositories, the newest candidate must not be older than the newest
/// production build.
pub fn check_upgrade(production: &RepoIndex, candidate: &RepoIndex) -> CheckResult {
    let flavor: Flavor = candidate.flavor;
    let prod = newest(production);
    let cand = newest(candidate);
    let mut shared = 0;
    let mut downgrades = Vec::new();
    for (name, c) in &cand {
        if let Some(p) = prod.get(name) {
            shared += 1;
            if c.compare(p, flavor).is_lt() {
                downgrades.push(format!("downgrade: {name} ({p} -> {c})"));
            }
        }
    }
    if shared == 0 {
        CheckResult::ok(ids::QC_UPGRADE_1, "no package shared with production")
    } else if downgrades.is_empty() {
        CheckResult::ok(ids::QC_UPGRADE_1, format!("{shared} packages upgrade cleanly"))
    } else {
        CheckResult::fail(ids::QC_UPGRADE_1, downgrades.join("\n"))
    }
}
