use std::fs;
use std::path::Path;

use crate::deploy::{DeploymentOutcome, InstalledPackage};
use crate::qc::{ids, CheckResult};

const DOC_DIRS: &[&str] = &["usr/share/doc", "usr/share/licenses"];

fn is_license_file(name: &str) -> bool {
    let upper = name.to_ascii_uppercase();
    upper.starts_with("LICENSE") || upper.starts_with("LICENCE") || upper.starts_with("COPYING") || name == "copyright"
}

/// License file shipped under the package documentation directories.
fn shipped_license(root: &Path, pkg: &InstalledPackage) -> Option<String> {
    DOC_DIRS.iter().find_map(|dir| {
        let docdir = root.join(dir).join(&pkg.name);
        let mut names: Vec<String> = fs::read_dir(&docdir)
            .ok()?
            .flatten()
            .filter(|e| e.path().is_file())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| is_license_file(n))
            .collect();
        names.sort();
        names.first().map(|name| format!("/{dir}/{}/{name}", pkg.name))
    })
}

/// QC_DOC_5: every installed package declares a license or ships one.
pub fn check_license(outcome: &DeploymentOutcome) -> CheckResult {
    if outcome.installed_packages.is_empty() {
        return CheckResult::fail(ids::QC_DOC_5, "no installed packages to inspect");
    }
    let mut missing = Vec::new();
    let mut notes = Vec::new();
    for pkg in &outcome.installed_packages {
        let declared = pkg.license.as_deref().filter(|l| !l.trim().is_empty());
        match (declared, shipped_license(&outcome.install_root, pkg)) {
            (Some(l), _) => notes.push(format!("{}: {l}", pkg.name)),
            (None, Some(file)) => notes.push(format!("{}: {file}", pkg.name)),
            (None, None) => missing.push(pkg.name.clone()),
        }
    }
    if missing.is_empty() {
        CheckResult::ok(ids::QC_DOC_5, notes.join("\n"))
    } else {
        CheckResult::fail(ids::QC_DOC_5, format!("no license: {}", missing.join(", ")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qc::CheckStatus;
    use std::path::PathBuf;

    fn outcome(root: &Path, license: Option<&str>) -> DeploymentOutcome {
        DeploymentOutcome {
            exit_status: 0,
            installed_packages: vec![InstalledPackage {
                name: "a".into(),
                epoch: 0,
                version: "1".into(),
                release: "1".into(),
                arch: "noarch".into(),
                license: license.map(str::to_string),
            }],
            log_path: PathBuf::from("log"),
            install_root: root.to_path_buf(),
            termination: "exit status 0".into(),
            output: String::new(),
        }
    }

    #[test]
    fn license_examples() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(check_license(&outcome(dir.path(), Some("Apache-2.0"))).status, CheckStatus::Ok);
        let r = check_license(&outcome(dir.path(), None));
        assert_eq!(r.status, CheckStatus::Fail);
        assert_eq!(r.detail, "no license: a");
        let doc = dir.path().join("usr/share/doc/a");
        fs::create_dir_all(&doc).unwrap();
        fs::write(doc.join("COPYING"), "GPL").unwrap();
        let r = check_license(&outcome(dir.path(), None));
        assert_eq!(r.status, CheckStatus::Ok);
        assert_eq!(r.detail, "a: /usr/share/doc/a/COPYING");
    }
}
