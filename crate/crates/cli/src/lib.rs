//! Argument parsing and dispatch for the `qcgate` binary.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use qcgate_core::product::list_products;
use qcgate_core::repo::{rc_check, Flavor};
use qcgate_core::report::{write_reports, EXIT_INTERNAL, EXIT_USAGE};
use qcgate_core::{exit_code, load_product_spec, run_validation, Error, Mode, ProductSpec, ReportFormat, RunContext};

#[derive(Debug, Parser)]
#[command(name = "qcgate", version, about = "Validate a product release against the quality criteria")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Run the four-block validation pipeline for one product.
    Validate(ValidateArgs),
    /// Check that a candidate repository installs against its base repositories.
    RcCheck(RcCheckArgs),
    /// List the product definitions found in a directory.
    ListProducts(ListArgs),
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Product name (looked up in --products-dir) or path to a product YAML file.
    #[arg(long, env = "UMD_PRODUCT")]
    product: String,
    /// Release label, e.g. umd4.
    #[arg(long, env = "UMD_RELEASE")]
    release: String,
    /// Operating system label, e.g. centos7 or ubuntu16.04. Free-form.
    #[arg(long, env = "UMD_OS")]
    os: String,
    /// Verification repository with the candidate packages. Repeatable.
    #[arg(long = "repository", value_name = "URL", env = "UMD_REPOSITORIES", value_delimiter = ',')]
    repositories: Vec<String>,
    /// Distribution repository completing the dependency closure. Repeatable.
    #[arg(long = "base-repository", value_name = "URL", value_delimiter = ',')]
    base_repositories: Vec<String>,
    /// Repository holding the released version, for the upgrade check. Repeatable.
    #[arg(long = "production-repository", value_name = "URL", value_delimiter = ',')]
    production_repositories: Vec<String>,
    /// Package flavor [default: deb for debian/ubuntu OS labels, rpm otherwise].
    #[arg(long)]
    flavor: Option<Flavor>,
    /// Execution mode: live or mock.
    #[arg(long, default_value = "live", env = "UMD_MODE", conflicts_with = "mock")]
    mode: Mode,
    /// Shorthand for --mode mock.
    #[arg(long)]
    mock: bool,
    /// Scratch directory for certificates, logs and deployment state
    /// [default: ./qcgate-work/<product>-<release>-<os>].
    #[arg(long, env = "UMD_WORKDIR")]
    workdir: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
    /// Per-check timeout in seconds.
    #[arg(long, default_value_t = 600, value_name = "SECONDS")]
    timeout: u64,
    /// Test-definition file for the product-specific checks.
    #[arg(long, env = "UMD_TESTS_FILE")]
    tests_file: Option<PathBuf>,
    /// Directory holding product definitions.
    #[arg(long, default_value = "products", env = "UMD_PRODUCTS_DIR")]
    products_dir: PathBuf,
    /// Host name the service certificate is issued for.
    #[arg(long, default_value = "localhost", env = "UMD_HOSTNAME")]
    hostname: String,
    /// Extra KEY=VALUE exported to hooks and tests. Repeatable.
    #[arg(long = "env", value_name = "KEY=VALUE", value_parser = parse_binding)]
    env: Vec<(String, String)>,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Directory the reports are written to.
    #[arg(long, default_value = "reports", env = "UMD_REPORT_DIR")]
    report_dir: PathBuf,
    /// Report formats, comma separated: text, json.
    #[arg(long, value_delimiter = ',', default_value = "text,json")]
    format: Vec<ReportFormat>,
}

#[derive(Debug, Args)]
struct RcCheckArgs {
    #[arg(long)]
    flavor: Flavor,
    /// Candidate repository URL or path.
    #[arg(long)]
    candidate: String,
    /// Base repository URL or path. Repeatable, at least one.
    #[arg(long = "base", required = true)]
    base: Vec<String>,
    /// Print the summary as JSON instead of text.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct ListArgs {
    #[arg(long, default_value = "products", env = "UMD_PRODUCTS_DIR")]
    products_dir: PathBuf,
}

fn parse_binding(s: &str) -> Result<(String, String), String> {
    match s.split_once('=') {
        Some((k, v)) if !k.is_empty() => Ok((k.to_string(), v.to_string())),
        _ => Err(format!("expected KEY=VALUE, got '{s}'")),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidateInvocation {
    pub product: String,
    pub products_dir: PathBuf,
    pub context: RunContextSpec,
    pub report_dir: PathBuf,
    pub report_formats: Vec<ReportFormat>,
}

/// Everything needed to build the run context; kept separate so parsing
/// has no side effects.
#[derive(Debug, Clone, PartialEq)]
pub struct RunContextSpec {
    pub release: String,
    pub os: String,
    pub repositories: Vec<String>,
    pub base_repositories: Vec<String>,
    pub production_repositories: Vec<String>,
    pub flavor: Option<Flavor>,
    pub mode: Mode,
    pub workdir: Option<PathBuf>,
    pub timeout: Duration,
    pub tests_file: Option<PathBuf>,
    pub hostname: String,
    pub environment: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum CliInvocation {
    Validate(ValidateInvocation),
    RcCheck {
        flavor: Flavor,
        candidate: String,
        base: Vec<String>,
        json: bool,
    },
    ListProducts {
        products_dir: PathBuf,
    },
}

/// Usage failure with clap's rendered message. `exit_code` is 0 for
/// `--help` and `--version`.
#[derive(Debug)]
pub struct UsageError {
    pub message: String,
    pub exit_code: i32,
}

pub fn parse_cli<I, T>(argv: I) -> Result<CliInvocation, UsageError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| UsageError {
        message: e.render().to_string(),
        exit_code: if e.use_stderr() { EXIT_USAGE } else { 0 },
    })?;
    Ok(match cli.command {
        Command::Validate(a) => {
            let mut formats = Vec::new();
            for f in a.output.format {
                if !formats.contains(&f) {
                    formats.push(f);
                }
            }
            CliInvocation::Validate(ValidateInvocation {
                product: a.product,
                products_dir: a.products_dir,
                report_dir: a.output.report_dir,
                report_formats: formats,
                context: RunContextSpec {
                    release: a.release,
                    os: a.os,
                    repositories: a.repositories,
                    base_repositories: a.base_repositories,
                    production_repositories: a.production_repositories,
                    flavor: a.flavor,
                    mode: if a.mock { Mode::Mock } else { a.mode },
                    workdir: a.workdir,
                    timeout: Duration::from_secs(a.timeout),
                    tests_file: a.tests_file,
                    hostname: a.hostname,
                    environment: a.env.into_iter().collect(),
                },
            })
        }
        Command::RcCheck(a) => CliInvocation::RcCheck {
            flavor: a.flavor,
            candidate: a.candidate,
            base: a.base,
            json: a.json,
        },
        Command::ListProducts(a) => CliInvocation::ListProducts {
            products_dir: a.products_dir,
        },
    })
}

/// Resolves `--product` to a definition: a YAML path, `<dir>/<name>.yaml`,
/// or any file in `dir` whose `name` matches.
pub fn find_product(product: &str, dir: &Path) -> qcgate_core::Result<ProductSpec> {
    let as_path = Path::new(product);
    if as_path.extension().is_some_and(|e| e == "yaml" || e == "yml") && as_path.is_file() {
        return load_product_spec(as_path);
    }
    for ext in ["yaml", "yml"] {
        let p = dir.join(format!("{product}.{ext}"));
        if p.is_file() {
            return load_product_spec(&p);
        }
    }
    let mut known = Vec::new();
    if dir.is_dir() {
        for (_, spec) in list_products(dir)? {
            if let Ok(spec) = spec {
                if spec.name == product {
                    return Ok(spec);
                }
                known.push(spec.name);
            }
        }
    }
    known.sort();
    Err(Error::UnknownProduct {
        name: product.to_string(),
        available: known,
    })
}

impl RunContextSpec {
    pub fn build(&self, product: &str) -> std::io::Result<RunContext> {
        let workdir = match &self.workdir {
            Some(w) => w.clone(),
            None => PathBuf::from("qcgate-work").join(format!("{product}-{}-{}", self.release, self.os)),
        };
        std::fs::create_dir_all(&workdir)?;
        let workdir = workdir.canonicalize()?;
        let mut ctx = RunContext::new(&self.release, &self.os, workdir);
        if let Some(f) = self.flavor {
            ctx.flavor = f;
        }
        ctx.repositories = self.repositories.clone();
        ctx.base_repositories = self.base_repositories.clone();
        ctx.production_repositories = self.production_repositories.clone();
        ctx.mode = self.mode;
        ctx.timeout_per_check = self.timeout;
        ctx.tests_file = self.tests_file.clone();
        ctx.hostname = self.hostname.clone();
        ctx.environment = self.environment.clone();
        Ok(ctx)
    }
}

fn validate(inv: &ValidateInvocation, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let spec = match find_product(&inv.product, &inv.products_dir) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "qcgate: {e}");
            return EXIT_USAGE;
        }
    };
    let ctx = match inv.context.build(&spec.name) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(err, "qcgate: workdir: {e}");
            return EXIT_INTERNAL;
        }
    };
    let report = match run_validation(&spec, &ctx) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "qcgate: {e}");
            return EXIT_INTERNAL;
        }
    };
    match write_reports(&report, &inv.report_dir, &inv.report_formats) {
        Ok(paths) => {
            for p in paths {
                let _ = writeln!(err, "report: {}", p.display());
            }
        }
        Err(e) => {
            let _ = writeln!(err, "qcgate: {e}");
            return EXIT_INTERNAL;
        }
    }
    let _ = out.write_all(qcgate_core::report::render_text(&report).as_bytes());
    exit_code(report.verdict)
}

/// Executes a parsed invocation and returns the process exit status.
pub fn run(inv: &CliInvocation, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match inv {
        CliInvocation::Validate(v) => validate(v, out, err),
        CliInvocation::RcCheck {
            flavor,
            candidate,
            base,
            json,
        } => {
            let summary = rc_check(candidate, base, *flavor);
            let body = if *json {
                let mut s = serde_json::to_string_pretty(&summary.to_json()).expect("summary serializes");
                s.push('\n');
                s
            } else {
                summary.to_text()
            };
            let _ = out.write_all(body.as_bytes());
            exit_code(summary.verdict)
        }
        CliInvocation::ListProducts { products_dir } => match list_products(products_dir) {
            Ok(entries) => {
                let mut status = 0;
                for (path, spec) in entries {
                    match spec {
                        Ok(s) => {
                            let _ = writeln!(out, "{}\t{}\t{}", s.name, s.backend.kind(), path.display());
                        }
                        Err(e) => {
                            status = 1;
                            let _ = writeln!(err, "{}: {e}", path.display());
                        }
                    }
                }
                status
            }
            Err(e) => {
                let _ = writeln!(err, "qcgate: {e}");
                EXIT_USAGE
            }
        },
    }
}

/// Parses `argv`, runs, and returns the exit status.
pub fn main_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_cli(argv) {
        Ok(inv) => run(&inv, out, err),
        Err(u) => {
            if u.exit_code == 0 {
                let _ = out.write_all(u.message.as_bytes());
            } else {
                let _ = err.write_all(u.message.as_bytes());
            }
            u.exit_code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_invocation() {
        let inv = parse_cli(["qcgate", "validate", "--product", "fts", "--release", "umd4", "--os", "centos7", "--repository", "http://r/x"]).unwrap();
        let CliInvocation::Validate(v) = inv else { panic!() };
        assert_eq!(v.product, "fts");
        assert_eq!(v.context.repositories, vec!["http://r/x"]);
        assert_eq!(v.context.mode, Mode::Live);
        assert_eq!(v.report_formats, vec![ReportFormat::Text, ReportFormat::Json]);
    }

    #[test]
    fn rc_check_invocation() {
        let inv = parse_cli(["qcgate", "rc-check", "--flavor", "rpm", "--candidate", "file:///c", "--base", "file:///b"]).unwrap();
        assert_eq!(
            inv,
            CliInvocation::RcCheck {
                flavor: Flavor::Rpm,
                candidate: "file:///c".into(),
                base: vec!["file:///b".into()],
                json: false
            }
        );
    }

    #[test]
    fn usage_errors_exit_64() {
        for argv in [
            vec!["qcgate", "validate", "--release", "umd4", "--os", "centos7"],
            vec!["qcgate", "validate", "--product", "p", "--release", "r", "--os", "o", "--bogus"],
            vec!["qcgate", "validate", "--product", "p", "--release", "r", "--os", "o", "--mock", "--mode", "live"],
            vec!["qcgate", "rc-check", "--flavor", "rpm", "--candidate", "c"],
        ] {
            assert_eq!(parse_cli(argv).unwrap_err().exit_code, EXIT_USAGE);
        }
    }

    #[test]
    fn env_bindings() {
        assert_eq!(parse_binding("A=b=c"), Ok(("A".into(), "b=c".into())));
        assert!(parse_binding("=x").is_err());
    }
}
