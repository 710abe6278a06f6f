//! Command lines for the real deployment tools and parsers for the system
//! package-manager queries. Everything here is pure so argument order can be
//! tested without the tools installed.

use std::path::Path;

use super::InstalledPackage;
use crate::repo::Flavor;

pub fn git_clone_args(url: &str, branch: &str, dest: &Path) -> Vec<String> {
    vec![
        "clone".into(),
        "--depth".into(),
        "1".into(),
        "--branch".into(),
        branch.into(),
        url.into(),
        dest.display().to_string(),
    ]
}

pub fn puppet_apply_args(modulepath: &Path, hiera_config: &Path, manifest: &Path) -> Vec<String> {
    vec![
        "apply".into(),
        "--modulepath".into(),
        modulepath.display().to_string(),
        "--hiera_config".into(),
        hiera_config.display().to_string(),
        manifest.display().to_string(),
    ]
}

pub fn ansible_playbook_args(playbook: &Path, tags: &[String], extra_vars_file: &Path) -> Vec<String> {
    let mut args = vec![
        "-i".into(),
        "localhost,".into(),
        "-c".into(),
        "local".into(),
    ];
    if !tags.is_empty() {
        args.push("--tags".into());
        args.push(tags.join(","));
    }
    args.push("--extra-vars".into());
    args.push(format!("@{}", extra_vars_file.display()));
    args.push(playbook.display().to_string());
    args
}

pub fn ansible_playbook(role_dir: &Path) -> String {
    format!(
        "- hosts: all\n  become: true\n  roles:\n    - role: {}\n",
        role_dir.display()
    )
}

/// Hiera 5 configuration searching the generated parameters first, then
/// the product's data files inside each module checkout.
pub fn hiera_config(params_dir: &Path, module_dirs: &[&Path], hiera_data: &[String]) -> String {
    let mut out = String::from("---\nversion: 5\nhierarchy:\n");
    out.push_str(&format!(
        "  - name: \"extra vars\"\n    datadir: \"{}\"\n    path: \"extra_vars.yaml\"\n",
        params_dir.display()
    ));
    for dir in module_dirs {
        for data in hiera_data {
            out.push_str(&format!(
                "  - name: \"{data}\"\n    datadir: \"{}\"\n    path: \"{data}\"\n",
                dir.join("data").display()
            ));
        }
    }
    out
}

pub fn package_query(flavor: Flavor) -> (&'static str, Vec<String>) {
    match flavor {
        Flavor::Rpm => (
            "rpm",
            vec![
                "-qa".into(),
                "--qf".into(),
                "%{NAME}\\t%{EPOCHNUM}\\t%{VERSION}\\t%{RELEASE}\\t%{ARCH}\\t%{LICENSE}\\n".into(),
            ],
        ),
        Flavor::Deb => (
            "dpkg-query",
            vec!["-W".into(), "-f".into(), "${Package}\\t${Version}\\t${Architecture}\\n".into()],
        ),
    }
}

/// Parses the tab-separated output of [`package_query`].
pub fn parse_package_query(flavor: Flavor, output: &str) -> Vec<InstalledPackage> {
    let mut out = Vec::new();
    for line in output.lines().filter(|l| !l.trim().is_empty()) {
        let f: Vec<&str> = line.split('\t').collect();
        match flavor {
            Flavor::Rpm if f.len() >= 5 => {
                let license = f.get(5).map(|s| s.trim()).filter(|s| !s.is_empty() && *s != "(none)");
                out.push(InstalledPackage {
                    name: f[0].into(),
                    epoch: f[1].parse().unwrap_or(0),
                    version: f[2].into(),
                    release: f[3].into(),
                    arch: f[4].into(),
                    license: license.map(str::to_string),
                });
            }
            Flavor::Deb if f.len() >= 3 => {
                let evr = crate::repo::Evr::parse_deb(f[1]);
                out.push(InstalledPackage {
                    name: f[0].into(),
                    epoch: evr.epoch,
                    version: evr.version,
                    release: evr.release,
                    arch: f[2].into(),
                    license: None,
                });
            }
            _ => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clone_uses_branch_verbatim() {
        let args = git_clone_args("git://github.com/egi-qc/puppet-fts.git", "umd", Path::new("/w/modules/fts"));
        let pos = args.iter().position(|a| a == "--branch").unwrap();
        assert_eq!(args[pos + 1], "umd");
        assert_eq!(args.last().unwrap(), "/w/modules/fts");
    }

    #[test]
    fn ansible_tags_joined() {
        let tags = vec!["untagged".to_string(), "cmd".to_string()];
        let args = ansible_playbook_args(Path::new("/w/site.yml"), &tags, Path::new("/w/params/extra_vars.yaml"));
        assert_eq!(
            args,
            ["-i", "localhost,", "-c", "local", "--tags", "untagged,cmd", "--extra-vars", "@/w/params/extra_vars.yaml", "/w/site.yml"]
        );
    }

    #[test]
    fn query_parsing() {
        let rpm = "fts-server\t0\t3.12.0\t1.el7\tx86_64\tASL 2.0\nbash\t0\t4.2.46\t34.el7\tx86_64\t(none)\n";
        let pkgs = parse_package_query(Flavor::Rpm, rpm);
        assert_eq!(pkgs.len(), 2);
        assert_eq!(pkgs[0].license.as_deref(), Some("ASL 2.0"));
        assert_eq!(pkgs[1].license, None);

        let deb = parse_package_query(Flavor::Deb, "bash\t5.1-6ubuntu1\tamd64\nlibc6\t1:2.35-0ubuntu3\tamd64\n");
        assert_eq!((deb[1].epoch, deb[1].version.as_str(), deb[1].release.as_str()), (1, "2.35", "0ubuntu3"));
    }
}
