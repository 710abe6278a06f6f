//! Four-block validation run.
//!
//! Installation, then security and operations, then information model,
//! then product-specific tests. A critical failure in one block marks every
//! check of the later blocks NotApplicable. Certificates are issued before
//! the first block so the service is deployed with them in place.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::Utc;

use crate::context::RunContext;
use crate::deploy::{self, DeploymentOutcome, InstalledPackage};
use crate::error::{Error, Result};
use crate::exec::{self, ExecError, ExecRequest, Termination};
use crate::functest::{self, TestSuite};
use crate::infomodel::{self, GlueFlavor, InfoEndpoint, VersionProbe};
use crate::product::{ProductSpec, PLUGGABLE_CHECKS};
use crate::qc::{
    aggregate_verdict, builtin_qc_registry, ids, registry_position, CheckResult, CheckStatus, Mode, ValidationReport,
};
use crate::repo::{self, RepoIndex};
use crate::security::{self, scan, CertAuthority, IssuedCert, ScanOutcome};

/// Checks of each block, in report order.
pub const BLOCKS: [(&str, &[&str]); 4] = [
    ("installation", &[ids::QC_DIST_1, ids::QC_UPGRADE_1]),
    (
        "security and operations",
        &[
            ids::QC_DOC_5,
            ids::QC_SEC_1,
            ids::QC_SEC_2,
            ids::QC_SEC_3,
            ids::QC_SEC_4,
            ids::QC_SEC_5,
            ids::QC_SEC_6,
            ids::QC_MON_1,
            ids::QC_ACC_1,
            ids::QC_SUPPORT_1,
        ],
    ),
    ("information model", &[ids::QC_INFO_1, ids::QC_INFO_2, ids::QC_INFO_3]),
    ("specific QC", &[ids::QC_FUNC_1, ids::QC_FUNC_2]),
];

pub const INVOCATION_LOG: &str = "pipeline.log";

pub const LIVE_SCAN_ROOTS: [&str; 3] = ["/etc", "/opt", "/var/lib"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HookKind {
    PreConfig,
    PostConfig,
}

impl HookKind {
    pub fn label(self) -> &'static str {
        match self {
            HookKind::PreConfig => "pre_config",
            HookKind::PostConfig => "post_config",
        }
    }
}

#[derive(Debug, Clone)]
pub struct HookOutcome {
    pub kind: HookKind,
    /// None when no hook is configured.
    pub termination: Option<Termination>,
    pub detail: String,
    pub output: String,
    /// `KEY=VALUE` bindings the hook wrote to `$UMD_HOOK_EXPORT`.
    pub exports: Vec<(String, String)>,
    pub log_path: Option<PathBuf>,
}

impl HookOutcome {
    pub fn skipped(&self) -> bool {
        self.termination.is_none() && self.detail == "skipped"
    }

    pub fn succeeded(&self) -> bool {
        self.skipped() || self.termination == Some(Termination::Exited(0))
    }
}

fn parse_exports(text: &str) -> Vec<(String, String)> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .filter_map(|l| {
            let l = l.strip_prefix("export ").unwrap_or(l);
            let (k, v) = l.split_once('=')?;
            let k = k.trim();
            (!k.is_empty()).then(|| (k.to_string(), v.to_string()))
        })
        .collect()
}

/// Runs a configured hook with the run environment. Nothing configured
/// yields a "skipped" outcome.
pub fn run_hook(kind: HookKind, spec: &ProductSpec, ctx: &RunContext) -> HookOutcome {
    let script = match kind {
        HookKind::PreConfig => spec.hooks.pre_config.as_ref(),
        HookKind::PostConfig => spec.hooks.post_config.as_ref(),
    };
    let mut outcome = HookOutcome {
        kind,
        termination: None,
        detail: "skipped".into(),
        output: String::new(),
        exports: Vec::new(),
        log_path: None,
    };
    let Some(script) = script else {
        return outcome;
    };
    let dir = ctx.workdir.join("hooks");
    let log = dir.join(format!("{}.log", kind.label()));
    let export_file = dir.join(format!("{}.env", kind.label()));
    if let Err(e) = fs::create_dir_all(&dir) {
        outcome.detail = format!("cannot create {}: {e}", dir.display());
        return outcome;
    }
    let _ = fs::remove_file(&export_file);
    let req = ExecRequest::new(spec.resolve(script), &log)
        .cwd(&spec.source_dir)
        .env(ctx.exported_env())
        .env([("UMD_HOOK_EXPORT".to_string(), export_file.display().to_string())])
        .timeout(ctx.timeout_per_check);
    match exec::run(&req) {
        Ok(out) => {
            outcome.termination = Some(out.termination);
            outcome.detail = out.describe();
            outcome.output = out.output;
            outcome.log_path = Some(log);
            outcome.exports = fs::read_to_string(&export_file).map(|t| parse_exports(&t)).unwrap_or_default();
        }
        Err(ExecError::NotFound(p)) => outcome.detail = format!("not found: {}", p.display()),
        Err(e) => outcome.detail = e.to_string(),
    }
    outcome
}

struct Certificates {
    ca: CertAuthority,
    host: IssuedCert,
}

/// State shared by the blocks of one run.
pub struct Pipeline<'a> {
    spec: &'a ProductSpec,
    ctx: RunContext,
    suite: Option<TestSuite>,
    certs: Option<Certificates>,
    outcome: Option<DeploymentOutcome>,
    installed: Vec<InstalledPackage>,
    log: Vec<String>,
}

fn stamp(mut r: CheckResult, started: Instant) -> CheckResult {
    if r.duration == 0.0 {
        r.duration = started.elapsed().as_secs_f64();
    }
    r
}

impl<'a> Pipeline<'a> {
    /// Checks preconditions: writable workdir and resolvable test suite.
    pub fn new(spec: &'a ProductSpec, ctx: &RunContext) -> Result<Self> {
        ctx.check_workdir()?;
        let suite = match &spec.qc_specific_id {
            None => None,
            Some(id) => {
                let path = ctx.tests_file.as_ref().ok_or_else(|| {
                    Error::TestDefinitionMissing(format!("qc_specific_id '{id}' set but no test-definition file given"))
                })?;
                Some(functest::load_test_definitions(path, id)?)
            }
        };
        let mut run_ctx = ctx.clone();
        for (k, v) in &spec.extra_vars {
            run_ctx.environment.insert(k.clone(), v.clone());
        }
        Ok(Pipeline {
            spec,
            ctx: run_ctx,
            suite,
            certs: None,
            outcome: None,
            installed: Vec::new(),
            log: Vec::new(),
        })
    }

    fn note(&mut self, line: impl Into<String>) {
        let line = line.into();
        let path = self.ctx.workdir.join(INVOCATION_LOG);
        if let Ok(mut f) = fs::OpenOptions::new().create(true).append(true).open(path) {
            let _ = writeln!(f, "{line}");
        }
        self.log.push(line);
    }

    /// Lines written to `<workdir>/pipeline.log` so far.
    pub fn invocation_log(&self) -> &[String] {
        &self.log
    }

    /// Issues the test CA and host certificate when the product needs one.
    pub fn issue_certificates(&mut self) -> Result<Vec<PathBuf>> {
        if !self.spec.need_cert {
            return Ok(Vec::new());
        }
        let ca = security::create_ca(&self.ctx.workdir)?;
        let host = security::issue_host_cert(&ca, &self.ctx.hostname)?;
        self.note(format!("certificates: issued for {}", self.ctx.hostname));
        let env = &mut self.ctx.environment;
        env.insert("UMD_CA_CERT".into(), ca.cert_path.display().to_string());
        env.insert("UMD_HOST_CERT".into(), host.cert_path.display().to_string());
        env.insert("UMD_HOST_KEY".into(), host.key_path.display().to_string());
        let paths = vec![ca.cert_path.clone(), host.cert_path.clone()];
        self.certs = Some(Certificates { ca, host });
        Ok(paths)
    }

    fn fetch(&self, sources: &[String]) -> std::result::Result<Vec<RepoIndex>, String> {
        let fetched = repo::fetch_all(sources, self.ctx.flavor, &repo::FetchOptions::default());
        let mut out = Vec::new();
        let mut errors = Vec::new();
        for (src, r) in sources.iter().zip(fetched) {
            match r {
                Ok(index) => out.push(index),
                Err(e) => errors.push(format!("repository unavailable: {src}: {e}")),
            }
        }
        if errors.is_empty() {
            Ok(out)
        } else {
            Err(errors.join("\n"))
        }
    }

    fn install_fail(&self, detail: String, artifacts: Vec<PathBuf>, started: Instant) -> Vec<CheckResult> {
        vec![
            stamp(CheckResult::fail(ids::QC_DIST_1, detail).with_artifacts(artifacts), started),
            CheckResult::not_applicable(ids::QC_UPGRADE_1, "installation failed"),
        ]
    }

    /// Block 1: hooks, deployment, QC_DIST_1 and QC_UPGRADE_1.
    pub fn run_block_installation(&mut self) -> Result<Vec<CheckResult>> {
        let started = Instant::now();
        self.note(format!("block 1 installation: backend {}", self.spec.backend.kind()));

        let pre = run_hook(HookKind::PreConfig, self.spec, &self.ctx);
        if !pre.skipped() {
            self.note(format!("hook pre_config: {}", pre.detail));
        }
        if !pre.succeeded() {
            let detail = format!("pre_config hook failed ({})\n{}", pre.detail, exec::excerpt(&pre.output, 20));
            return Ok(self.install_fail(detail, pre.log_path.into_iter().collect(), started));
        }
        let mut vars: Vec<(String, String)> = self.spec.extra_vars.clone();
        for (k, v) in pre.exports {
            match vars.iter_mut().find(|(key, _)| *key == k) {
                Some(slot) => slot.1 = v.clone(),
                None => vars.push((k.clone(), v.clone())),
            }
            self.ctx.environment.insert(k, v);
        }

        let handle = match deploy::prepare_environment(&self.spec.backend, &vars, &self.ctx) {
            Ok(h) => h,
            Err(e @ Error::BackendUnavailable(_)) => return Err(e),
            Err(e) => return Ok(self.install_fail(e.to_string(), Vec::new(), started)),
        };
        let outcome = match deploy::execute_deployment(&handle, &self.ctx, &[]) {
            Ok(o) => o,
            Err(e) => return Ok(self.install_fail(e.to_string(), vec![handle.log_path.clone()], started)),
        };
        self.note(format!("deploy: {}", outcome.termination));
        let mut artifacts = vec![outcome.log_path.clone()];

        if outcome.succeeded() {
            let post = run_hook(HookKind::PostConfig, self.spec, &self.ctx);
            if !post.skipped() {
                self.note(format!("hook post_config: {}", post.detail));
            }
            if !post.succeeded() {
                let detail = format!("post_config hook failed ({})\n{}", post.detail, exec::excerpt(&post.output, 20));
                artifacts.extend(post.log_path);
                self.outcome = Some(outcome);
                return Ok(self.install_fail(detail, artifacts, started));
            }
        }

        let mut sources = self.ctx.repositories.clone();
        let n_candidate = sources.len();
        sources.extend(self.ctx.base_repositories.iter().cloned());
        let indexes = match self.fetch(&sources) {
            Ok(i) => i,
            Err(detail) => {
                self.outcome = Some(outcome);
                return Ok(self.install_fail(detail, artifacts, started));
            }
        };
        let (cand_parts, base) = indexes.split_at(n_candidate);
        let candidate = RepoIndex::merged(self.ctx.flavor, self.ctx.repositories.join(","), cand_parts);

        let dist = deploy::check_binary_distribution(&outcome, &candidate, base).with_artifacts(artifacts);
        let dist = dist.with_duration(started.elapsed().as_secs_f64());
        self.installed = self.candidate_installed(&outcome, &candidate);
        let upgrade_started = Instant::now();
        let upgrade = if dist.status != CheckStatus::Ok {
            CheckResult::not_applicable(ids::QC_UPGRADE_1, "installation failed")
        } else if self.ctx.production_repositories.is_empty() {
            CheckResult::not_applicable(ids::QC_UPGRADE_1, "no production version to upgrade from")
        } else {
            let prod_urls = self.ctx.production_repositories.clone();
            match self.fetch(&prod_urls) {
                Err(detail) => CheckResult::fail(ids::QC_UPGRADE_1, detail),
                Ok(parts) => {
                    let production = RepoIndex::merged(self.ctx.flavor, prod_urls.join(","), &parts);
                    let prod_names: BTreeSet<&str> = production.packages.iter().map(|p| p.name.as_str()).collect();
                    if !candidate.packages.iter().any(|p| prod_names.contains(p.name.as_str())) {
                        CheckResult::not_applicable(ids::QC_UPGRADE_1, "first inclusion: no package in production")
                    } else {
                        deploy::check_upgrade(&production, &candidate)
                    }
                }
            }
        };
        self.outcome = Some(outcome);
        Ok(vec![dist, stamp(upgrade, upgrade_started)])
    }

    /// Live runs query the whole system; only candidate packages matter.
    fn candidate_installed(&self, outcome: &DeploymentOutcome, candidate: &RepoIndex) -> Vec<InstalledPackage> {
        if self.ctx.mode == Mode::Mock || candidate.packages.is_empty() {
            return outcome.installed_packages.clone();
        }
        let names: BTreeSet<&str> = candidate.packages.iter().map(|p| p.name.as_str()).collect();
        outcome
            .installed_packages
            .iter()
            .filter(|p| names.contains(p.name.as_str()))
            .cloned()
            .collect()
    }

    /// Install root plus the product's extra roots. A live deployment into
    /// `/` scans only the configured roots, or [`LIVE_SCAN_ROOTS`].
    fn scan_roots(&self) -> Vec<PathBuf> {
        let install_root = self
            .outcome
            .as_ref()
            .map(|o| o.install_root.clone())
            .unwrap_or_else(|| self.ctx.workdir.join("root"));
        let extra: Vec<PathBuf> = self.spec.scan_roots.iter().map(|r| self.spec.resolve(r)).collect();
        let mut roots = if install_root == Path::new("/") {
            if extra.is_empty() {
                LIVE_SCAN_ROOTS.iter().map(PathBuf::from).collect()
            } else {
                extra
            }
        } else {
            let mut r = vec![install_root];
            r.extend(extra);
            r
        };
        let all = roots.clone();
        roots.retain(|r| !all.iter().any(|o| o != r && r.starts_with(o)));
        roots.dedup();
        roots
    }

    fn scan_result(&self, id: &str, roots: &[PathBuf], outcome: std::result::Result<ScanOutcome, Error>) -> CheckResult {
        let outcome = match outcome {
            Ok(o) => o,
            Err(e) => return CheckResult::fail(id, e.to_string()),
        };
        let shown: Vec<String> = roots.iter().map(|r| self.ctx.relative(r).display().to_string()).collect();
        let mut lines = vec![format!("scanned: {}", shown.join(", "))];
        let mut artifacts = Vec::new();
        if !outcome.findings.is_empty() {
            let dir = self.ctx.workdir.join("findings");
            let file = dir.join(format!("{id}.txt"));
            let body: String = outcome
                .findings
                .iter()
                .map(|f| format!("{}\t{}\t{}\n", self.ctx.relative(&f.path).display(), f.kind.label(), f.detail))
                .collect();
            if fs::create_dir_all(&dir).and_then(|_| fs::write(&file, body)).is_ok() {
                artifacts.push(file);
            }
        }
        for f in &outcome.findings {
            lines.push(format!("{} {}", self.ctx.relative(&f.path).display(), f.detail));
        }
        lines.extend(outcome.warnings.iter().cloned());
        lines.extend(outcome.notes.iter().cloned());
        let detail = lines.join("\n");
        let r = if !outcome.findings.is_empty() {
            CheckResult::fail(id, detail)
        } else if !outcome.warnings.is_empty() {
            CheckResult::warning(id, detail)
        } else {
            CheckResult::ok(id, detail)
        };
        r.with_artifacts(artifacts)
    }

    fn external_check(&self, id: &str) -> CheckResult {
        let Some(script) = self.spec.external_checks.get(id) else {
            return CheckResult::not_applicable(id, "no external check configured");
        };
        let log = self.ctx.workdir.join("checks").join(format!("{id}.log"));
        let req = ExecRequest::new(self.spec.resolve(script), &log)
            .cwd(&self.spec.source_dir)
            .env(self.ctx.exported_env())
            .timeout(self.ctx.timeout_per_check);
        match exec::run(&req) {
            Ok(out) => {
                let detail = match out.output.trim() {
                    "" => out.describe(),
                    text => format!("{}\n{}", out.describe(), exec::excerpt(text, 20)),
                };
                let r = if out.success() {
                    CheckResult::ok(id, detail)
                } else {
                    CheckResult::fail(id, detail)
                };
                r.with_duration(out.duration.as_secs_f64()).with_artifacts([log])
            }
            Err(ExecError::NotFound(p)) => CheckResult::fail(id, format!("not found: {}", p.display())),
            Err(e) => CheckResult::fail(id, e.to_string()),
        }
    }

    fn certificate_checks(&self) -> Vec<CheckResult> {
        let started = Instant::now();
        let Some(certs) = &self.certs else {
            return vec![
                CheckResult::not_applicable(ids::QC_SEC_1, "need_cert is false"),
                CheckResult::not_applicable(ids::QC_SEC_2, "need_cert is false"),
            ];
        };
        let [sec1, sec2] = match &self.spec.tls_endpoint {
            Some(ep) => {
                let host = ep.host.clone().unwrap_or_else(|| self.ctx.hostname.clone());
                security::tls::probe_tls_endpoint(&host, ep.port, certs.ca.certificate())
            }
            None => security::tls::check_certificate_files(&certs.host.cert_path, certs.ca.certificate()),
        };
        vec![
            stamp(sec1, started).with_artifacts([certs.ca.cert_path.clone(), certs.host.cert_path.clone()]),
            stamp(sec2, started),
        ]
    }

    /// Block 2. Independent checks run concurrently and are merged back in
    /// registry order.
    pub fn run_block_security_ops(&mut self) -> Vec<CheckResult> {
        self.note("block 2 security and operations");
        let roots = self.scan_roots();
        let patterns = if self.spec.secret_patterns.is_empty() {
            scan::default_secret_patterns()
        } else {
            self.spec.secret_patterns.clone()
        };
        let this: &Pipeline = self;
        let mut results: Vec<CheckResult> = std::thread::scope(|s| {
            let license = s.spawn(|| {
                let started = Instant::now();
                let r = match &this.outcome {
                    Some(o) => {
                        let mut view = o.clone();
                        view.installed_packages = this.installed.clone();
                        security::check_license(&view)
                    }
                    None => CheckResult::fail(ids::QC_DOC_5, "no deployment outcome"),
                };
                vec![stamp(r, started)]
            });
            let certs = s.spawn(|| this.certificate_checks());
            let external = s.spawn(|| PLUGGABLE_CHECKS.iter().map(|id| this.external_check(id)).collect::<Vec<_>>());
            let writable = s.spawn(|| {
                let started = Instant::now();
                let out = scan::scan_world_writable(&roots);
                vec![stamp(this.scan_result(ids::QC_SEC_5, &roots, Ok(out)), started)]
            });
            let secrets = s.spawn(|| {
                let started = Instant::now();
                let out = scan::scan_readable_secrets(&roots, &patterns);
                vec![stamp(this.scan_result(ids::QC_SEC_6, &roots, out), started)]
            });
            let support = s.spawn(|| vec![security::check_support_channel(this.spec.support_url.as_deref())]);
            [license, certs, external, writable, secrets, support]
                .into_iter()
                .flat_map(|h| h.join().expect("block 2 check panicked"))
                .collect()
        });
        results.sort_by_key(|r| registry_position(&r.check_id));
        results
    }

    /// Block 3. Never touches the endpoint when `has_infomodel` is false.
    pub fn run_block_infomodel(&mut self) -> Vec<CheckResult> {
        if !self.spec.has_infomodel {
            self.note("block 3 information model: skipped (has_infomodel=false)");
            return BLOCKS[2]
                .1
                .iter()
                .map(|id| CheckResult::not_applicable(id, "has_infomodel is false"))
                .collect();
        }
        self.note("block 3 information model");
        let cfg = self.spec.infomodel.clone().unwrap_or_default();
        let endpoint = InfoEndpoint {
            host: cfg.host.clone().unwrap_or_else(|| self.ctx.hostname.clone()),
            port: cfg.port,
            base_dn: cfg.base_dn.clone(),
            fetch_command: cfg.fetch_command.clone(),
            base_dir: self.spec.source_dir.clone(),
        };
        let started = Instant::now();
        self.note(format!("infomodel: fetch {}:{}", endpoint.host, endpoint.port));
        let fetched = match infomodel::fetch_info(&endpoint, &self.ctx) {
            Ok(f) => f,
            Err(e) => {
                let detail = e.to_string();
                return BLOCKS[2]
                    .1
                    .iter()
                    .map(|id| stamp(CheckResult::fail(id, detail.clone()), started))
                    .collect();
            }
        };
        let mut results = Vec::new();
        for flavor in [GlueFlavor::Glue13, GlueFlavor::Glue2] {
            if cfg.flavors.contains(&flavor) {
                self.note(format!("infomodel: validator {}", flavor.label()));
                results.push(
                    infomodel::run_external_validator(&cfg.validator, &fetched.path, flavor, &endpoint, &self.ctx)
                        .with_artifacts([fetched.path.clone()]),
                );
            } else {
                results.push(CheckResult::not_applicable(
                    flavor.check_id(),
                    format!("{} not declared for this product", flavor.label()),
                ));
            }
        }
        let probe = VersionProbe {
            attribute: cfg.version_attribute.clone(),
            prefix: cfg.version_prefix.clone(),
            package: cfg.version_package.clone().unwrap_or_else(|| self.spec.name.clone()),
        };
        let version_started = Instant::now();
        results.push(stamp(
            infomodel::check_middleware_version(&fetched.document, &self.installed, &probe),
            version_started,
        ));
        results
    }

    /// Block 4.
    pub fn run_block_specific_qc(&mut self) -> Vec<CheckResult> {
        self.note("block 4 specific QC");
        match &self.suite {
            None => BLOCKS[3]
                .1
                .iter()
                .map(|id| CheckResult::not_applicable(id, "no qc_specific_id"))
                .collect(),
            Some(suite) => functest::run_suite(suite, &self.ctx).into(),
        }
    }
}

fn skipped(block: usize, cause: &CheckResult, cause_block: usize) -> Vec<CheckResult> {
    let mut reason = format!(
        "skipped: critical failure of {} in block {} ({})",
        cause.check_id,
        cause_block + 1,
        BLOCKS[cause_block].0
    );
    if block == 2 {
        reason.push_str("; endpoint-independent checks are skipped too");
    }
    BLOCKS[block].1.iter().map(|id| CheckResult::not_applicable(id, reason.clone())).collect()
}

fn relativize(results: &mut [CheckResult], workdir: &Path) {
    let prefix = format!("{}/", workdir.display());
    for r in results {
        for a in &mut r.artifacts {
            if let Ok(rel) = a.strip_prefix(workdir) {
                *a = rel.to_path_buf();
            }
        }
        if r.detail.contains(&prefix) {
            r.detail = r.detail.replace(&prefix, "");
        }
    }
}

/// Runs the four blocks for `spec` and assembles the report.
pub fn run_validation(spec: &ProductSpec, ctx: &RunContext) -> Result<ValidationReport> {
    let mut pipeline = Pipeline::new(spec, ctx)?;
    let _ = fs::remove_file(ctx.workdir.join(INVOCATION_LOG));
    let started = Utc::now();
    pipeline.note(format!("validate {} release={} os={} mode={}", spec.name, ctx.release, ctx.os, ctx.mode.label()));
    pipeline.issue_certificates()?;

    let mut results = pipeline.run_block_installation()?;
    let mut cause = results.iter().find(|r| r.is_critical_failure()).cloned().map(|r| (r, 0));
    for (block, (name, _)) in BLOCKS.iter().enumerate().skip(1) {
        let block_results = match &cause {
            Some((c, at)) => {
                pipeline.note(format!("block {} {name}: skipped", block + 1));
                skipped(block, c, *at)
            }
            None => match block {
                1 => pipeline.run_block_security_ops(),
                2 => pipeline.run_block_infomodel(),
                _ => pipeline.run_block_specific_qc(),
            },
        };
        if cause.is_none() {
            cause = block_results.iter().find(|r| r.is_critical_failure()).cloned().map(|r| (r, block));
        }
        results.extend(block_results);
    }
    relativize(&mut results, &ctx.workdir);
    let verdict = aggregate_verdict(&results, builtin_qc_registry())?;
    pipeline.note(format!("verdict {verdict}"));
    Ok(ValidationReport {
        product: spec.name.clone(),
        release: ctx.release.clone(),
        os: ctx.os.clone(),
        repositories: ctx.repositories.clone(),
        started,
        finished: Utc::now(),
        mode: ctx.mode,
        results,
        verdict,
    })
}
