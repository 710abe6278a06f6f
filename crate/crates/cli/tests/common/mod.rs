#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use qcgate_core::repo::{deb, rpmmd, Dependency, Evr, Flavor, Package, Relation, VersionConstraint};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn mock_fixture() -> PathBuf {
    fixtures().join("mock")
}

pub fn qcgate() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_qcgate"))
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run_qcgate(args: &[&str], cwd: &Path) -> Run {
    let out = Command::new(qcgate())
        .args(args)
        .current_dir(cwd)
        .env_clear()
        .env("PATH", std::env::var("PATH").unwrap_or_default())
        .output()
        .expect("spawn qcgate");
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// Parses "name op version" or a bare name.
pub fn constraint(text: &str, flavor: Flavor) -> VersionConstraint {
    let parts: Vec<&str> = text.split_whitespace().collect();
    match parts.as_slice() {
        [name] => VersionConstraint::any(*name),
        [name, op, ver] => {
            let rel = match *op {
                "<" | "<<" => Relation::Lt,
                "<=" => Relation::Le,
                "=" => Relation::Eq,
                ">=" => Relation::Ge,
                ">" | ">>" => Relation::Gt,
                other => panic!("operator {other}"),
            };
            VersionConstraint::versioned(*name, rel, Evr::parse(ver, flavor))
        }
        _ => panic!("constraint {text}"),
    }
}

pub struct PkgBuilder {
    flavor: Flavor,
    pkg: Package,
}

pub fn pkg(flavor: Flavor, name: &str, evr: &str, arch: &str) -> PkgBuilder {
    PkgBuilder {
        flavor,
        pkg: Package::new(name, Evr::parse(evr, flavor), arch),
    }
}

impl PkgBuilder {
    pub fn requires(mut self, text: &str) -> Self {
        let alts = text.split('|').map(|a| constraint(a.trim(), self.flavor)).collect();
        self.pkg.requires.push(Dependency::group(alts));
        self
    }

    pub fn provides(mut self, text: &str) -> Self {
        self.pkg.provides.push(constraint(text, self.flavor));
        self
    }

    pub fn license(mut self, l: &str) -> Self {
        self.pkg.license = Some(l.into());
        self
    }

    pub fn build(self) -> Package {
        self.pkg
    }
}

pub fn write_repo(flavor: Flavor, dir: &Path, packages: &[Package]) {
    match flavor {
        Flavor::Rpm => rpmmd::write_repository(dir, packages).expect("write rpm repo"),
        Flavor::Deb => {
            fs::create_dir_all(dir).unwrap();
            fs::write(dir.join("Packages"), deb::write_packages(packages)).unwrap();
        }
    }
}

/// Candidate, broken-candidate, base and production repositories matching
/// the mock product's manifest.
pub fn demo_repos(root: &Path) {
    let f = Flavor::Rpm;
    let server = || {
        pkg(f, "demo-server", "1.2.0-1.el7", "x86_64")
            .requires("demo-common = 1.2.0-1.el7")
            .requires("libc.so.6()(64bit)")
            .requires("openssl-libs >= 1:1.0.2")
            .license("Apache-2.0")
    };
    let common = pkg(f, "demo-common", "1.2.0-1.el7", "noarch").license("Apache-2.0").build();
    write_repo(f, &root.join("repos/good"), &[server().build(), common.clone()]);
    write_repo(
        f,
        &root.join("repos/broken"),
        &[server().requires("libdemo-transport.so.2()(64bit)").build(), common],
    );
    write_repo(
        f,
        &root.join("repos/base"),
        &[
            pkg(f, "glibc", "2.17-317.el7", "x86_64").provides("libc.so.6()(64bit)").build(),
            pkg(f, "openssl-libs", "1:1.0.2k-19.el7", "x86_64").build(),
        ],
    );
    write_repo(
        f,
        &root.join("repos/production"),
        &[pkg(f, "demo-server", "1.1.0-1.el7", "x86_64").build(), pkg(f, "demo-common", "1.1.0-1.el7", "noarch").build()],
    );
}

/// Blanks timestamps and durations, the only run-dependent fields.
pub fn normalize_report(json: &str) -> String {
    let stamp = regex_lite(json, "\"started\": \"", "\"", "<time>");
    let stamp = regex_lite(&stamp, "\"finished\": \"", "\"", "<time>");
    regex_lite(&stamp, "\"duration_s\": ", ",", "0")
}

fn regex_lite(text: &str, open: &str, close: &str, with: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(i) = rest.find(open) {
        let after = &rest[i + open.len()..];
        let j = after.find(close).expect("unterminated field");
        out.push_str(&rest[..i + open.len()]);
        out.push_str(with);
        rest = &after[j..];
    }
    out.push_str(rest);
    out
}
