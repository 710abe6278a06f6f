use std::fs;
use std::io::Write;

use qcgate_core::repo::{compute_closure, fetch_repo_metadata, rc_check, Flavor};
use qcgate_core::Verdict;

const CANDIDATE: &str = "\
Package: cloud-info-provider
Version: 0.10.3-1
Architecture: all
Depends: python (>= 2.7), python-yaml | python3-yaml, bdii, mail-transport-agent
Pre-Depends: dpkg (>= 1.17)
Recommends: python-novaclient

Package: cloud-info-provider-openstack
Version: 0.10.3-1
Architecture: all
Depends: cloud-info-provider (= 0.10.3-1), python-keystoneauth1 (>= 3.0)
";

const BASE: &str = "\
Package: python
Version: 2.7.12-1~16.04
Architecture: amd64
Provides: python-ctypes

Package: python3-yaml
Version: 3.11-3build1
Architecture: amd64

Package: bdii
Version: 5.2.23-1
Architecture: all

Package: postfix
Version: 3.1.0-3
Architecture: amd64
Provides: mail-transport-agent

Package: dpkg
Version: 1.18.4ubuntu1
Architecture: amd64

Package: python-keystoneauth1
Version: 2.4.1-1
Architecture: all
";

#[test]
fn deb_alternatives_virtuals_and_versions() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir_all(dir.path().join("cand")).unwrap();
    fs::create_dir_all(dir.path().join("base")).unwrap();
    fs::write(dir.path().join("cand/Packages"), CANDIDATE).unwrap();
    let mut gz = flate2::write::GzEncoder::new(Vec::new(), flate2::Compression::default());
    gz.write_all(BASE.as_bytes()).unwrap();
    fs::write(dir.path().join("base/Packages.gz"), gz.finish().unwrap()).unwrap();

    let cand_url = dir.path().join("cand").display().to_string();
    let base_url = format!("file://{}", dir.path().join("base").display());
    let candidate = fetch_repo_metadata(&cand_url, Flavor::Deb).unwrap();
    let base = fetch_repo_metadata(&base_url, Flavor::Deb).unwrap();
    let unmet = compute_closure(&candidate, &[base]).unwrap();
    let got: Vec<String> = unmet.iter().map(|u| format!("{} {}", u.requiring.name, u.constraint)).collect();
    // 2.4.1 is too old; recommends are soft and never reported
    assert_eq!(got, ["cloud-info-provider-openstack python-keystoneauth1 >= 3.0"]);

    let summary = rc_check(&cand_url, &[base_url], Flavor::Deb);
    assert_eq!(summary.verdict, Verdict::Fail);
    assert!(summary.to_text().contains("python-keystoneauth1"));
}

#[test]
fn unreadable_base_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir_all(dir.path().join("cand")).unwrap();
    fs::write(dir.path().join("cand/Packages"), CANDIDATE).unwrap();
    let summary = rc_check(
        &dir.path().join("cand").display().to_string(),
        &[dir.path().join("missing").display().to_string()],
        Flavor::Deb,
    );
    assert_eq!(summary.fetch_errors.len(), 1);
    assert_eq!(summary.verdict, Verdict::Fail);
}
