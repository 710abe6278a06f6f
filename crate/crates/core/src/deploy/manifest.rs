//! Outcome manifests for the mock backend.
//!
//! ```text
//! # comment
//! package: fts-server 0 3.12.0 1.el7 x86_64
//! license: fts-server Apache-2.0
//! dir: /var/lib/fts 0755
//! file: /etc/fts3/fts3config 0644 @files/fts3config
//! file: /etc/motd 0644 "hello\n"
//! file: /var/log/fts3/empty 0600 -
//! log: configuring fts
//! exit: 0
//! ```
//!
//! `@path` is read relative to the manifest, a quoted literal accepts
//! `\n`, `\t`, `\"` and `\\`, and `-` is an empty file.

use std::fs;
use std::path::{Component, Path, PathBuf};

use super::InstalledPackage;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockEntry {
    File { path: PathBuf, mode: u32, content: Vec<u8> },
    Dir { path: PathBuf, mode: u32 },
}

impl MockEntry {
    pub fn path(&self) -> &Path {
        match self {
            MockEntry::File { path, .. } | MockEntry::Dir { path, .. } => path,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MockManifest {
    pub source: PathBuf,
    pub packages: Vec<InstalledPackage>,
    pub entries: Vec<MockEntry>,
    pub exit_status: i32,
    pub log: Vec<String>,
}

fn parse_mode(text: &str) -> Option<u32> {
    if !(3..=4).contains(&text.len()) {
        return None;
    }
    u32::from_str_radix(text, 8).ok().filter(|m| *m <= 0o7777)
}

/// Absolute path without `..`, so materialization cannot leave the root.
fn parse_target(text: &str) -> Option<PathBuf> {
    let path = PathBuf::from(text);
    let ok = path.is_absolute() && path.components().all(|c| !matches!(c, Component::ParentDir));
    ok.then_some(path)
}

fn unquote(text: &str) -> std::result::Result<Vec<u8>, String> {
    let inner = text
        .strip_prefix('"')
        .and_then(|t| t.strip_suffix('"'))
        .ok_or("unterminated string literal")?;
    let mut out = String::new();
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('"') => out.push('"'),
            Some('\\') => out.push('\\'),
            Some(other) => return Err(format!("unknown escape \\{other}")),
            None => return Err("dangling backslash".into()),
        }
    }
    Ok(out.into_bytes())
}

pub fn parse_mock_manifest(path: &Path) -> Result<MockManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(format!("reading manifest {}", path.display()), e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_mock_manifest_str(&text, path, base)
}

pub fn parse_mock_manifest_str(text: &str, source: &Path, base: &Path) -> Result<MockManifest> {
    let mut manifest = MockManifest {
        source: source.to_path_buf(),
        ..Default::default()
    };
    let mut licenses: Vec<(usize, String, String)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| Error::Manifest {
            path: source.to_path_buf(),
            line: line_no,
            message,
        };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, rest) = line
            .split_once(':')
            .ok_or_else(|| err(format!("expected 'key: value', got '{line}'")))?;
        let rest = rest.trim();
        match key.trim() {
            "package" => {
                let f: Vec<&str> = rest.split_whitespace().collect();
                let [name, epoch, version, release, arch] = f[..] else {
                    return Err(err(format!("package needs 'name epoch version release arch', got '{rest}'")));
                };
                let epoch = epoch.parse().map_err(|_| err(format!("bad epoch '{epoch}'")))?;
                manifest.packages.push(InstalledPackage {
                    name: name.into(),
                    epoch,
                    version: version.into(),
                    release: if release == "-" { String::new() } else { release.into() },
                    arch: arch.into(),
                    license: None,
                });
            }
            "license" => {
                let (pkg, spdx) = rest
                    .split_once(char::is_whitespace)
                    .ok_or_else(|| err("license needs 'package identifier'".into()))?;
                licenses.push((line_no, pkg.to_string(), spdx.trim().to_string()));
            }
            "dir" => {
                let f: Vec<&str> = rest.split_whitespace().collect();
                let [target, mode] = f[..] else {
                    return Err(err(format!("dir needs 'path mode', got '{rest}'")));
                };
                manifest.entries.push(MockEntry::Dir {
                    path: parse_target(target).ok_or_else(|| err(format!("bad path '{target}'")))?,
                    mode: parse_mode(mode).ok_or_else(|| err(format!("bad mode '{mode}'")))?,
                });
            }
            "file" => {
                let mut parts = rest.splitn(3, char::is_whitespace);
                let (Some(target), Some(mode), Some(content)) = (parts.next(), parts.next(), parts.next()) else {
                    return Err(err(format!("file needs 'path mode content', got '{rest}'")));
                };
                let content = content.trim();
                let bytes = if content == "-" {
                    Vec::new()
                } else if let Some(rel) = content.strip_prefix('@') {
                    let from = base.join(rel);
                    fs::read(&from).map_err(|e| err(format!("cannot read {}: {e}", from.display())))?
                } else if content.starts_with('"') {
                    unquote(content).map_err(err)?
                } else {
                    return Err(err(format!("content must be @file, \"literal\" or -, got '{content}'")));
                };
                manifest.entries.push(MockEntry::File {
                    path: parse_target(target).ok_or_else(|| err(format!("bad path '{target}'")))?,
                    mode: parse_mode(mode).ok_or_else(|| err(format!("bad mode '{mode}'")))?,
                    content: bytes,
                });
            }
            "exit" => {
                manifest.exit_status = rest.parse().map_err(|_| err(format!("bad exit status '{rest}'")))?;
            }
            "log" => manifest.log.push(rest.to_string()),
            other => return Err(err(format!("unknown key '{other}'"))),
        }
    }

    for (line, pkg, spdx) in licenses {
        let target = manifest.packages.iter_mut().find(|p| p.name == pkg).ok_or_else(|| Error::Manifest {
            path: source.to_path_buf(),
            line,
            message: format!("license for undeclared package '{pkg}'"),
        })?;
        target.license = Some(spdx);
    }
    Ok(manifest)
}

/// Creates every entry under `root`, then applies directory modes deepest
/// first so restrictive parents do not block their children.
pub fn materialize(manifest: &MockManifest, root: &Path) -> Result<()> {
    use std::os::unix::fs::PermissionsExt;
    let io = |p: &Path, e| Error::io(format!("materializing {}", p.display()), e);
    fs::create_dir_all(root).map_err(|e| io(root, e))?;
    let mut dirs = Vec::new();
    for entry in &manifest.entries {
        let target = root.join(entry.path().strip_prefix("/").unwrap_or(entry.path()));
        match entry {
            MockEntry::Dir { mode, .. } => {
                fs::create_dir_all(&target).map_err(|e| io(&target, e))?;
                dirs.push((target, *mode));
            }
            MockEntry::File { mode, content, .. } => {
                if let Some(parent) = target.parent() {
                    fs::create_dir_all(parent).map_err(|e| io(parent, e))?;
                }
                fs::write(&target, content).map_err(|e| io(&target, e))?;
                fs::set_permissions(&target, fs::Permissions::from_mode(*mode)).map_err(|e| io(&target, e))?;
            }
        }
    }
    dirs.sort_by_key(|(p, _)| std::cmp::Reverse(p.components().count()));
    for (dir, mode) in dirs {
        fs::set_permissions(&dir, fs::Permissions::from_mode(mode)).map_err(|e| io(&dir, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<MockManifest> {
        parse_mock_manifest_str(text, Path::new("m.manifest"), Path::new("."))
    }

    #[test]
    fn full_manifest() {
        let m = parse(
            "# c\npackage: a 0 1.0 1 noarch\nlicense: a Apache-2.0\ndir: /var/lib/a 1777\nfile: /etc/a.conf 0644 \"x = \\\"1\\\"\\n\"\nfile: /etc/empty 600 -\nlog: hi\nexit: 2\n",
        )
        .unwrap();
        assert_eq!(m.packages[0].license.as_deref(), Some("Apache-2.0"));
        assert_eq!(m.exit_status, 2);
        assert_eq!(m.log, vec!["hi"]);
        assert_eq!(
            m.entries[1],
            MockEntry::File {
                path: "/etc/a.conf".into(),
                mode: 0o644,
                content: b"x = \"1\"\n".to_vec()
            }
        );
        assert_eq!(m.entries[0], MockEntry::Dir { path: "/var/lib/a".into(), mode: 0o1777 });
    }

    #[test]
    fn errors_carry_line_numbers() {
        for (text, line) in [
            ("package: a 0 1.0\n", 1),
            ("\nfile: relative 0644 -\n", 2),
            ("file: /a 9999 -\n", 1),
            ("file: /../etc 0644 -\n", 1),
            ("license: ghost MIT\n", 1),
            ("bogus: 1\n", 1),
            ("file: /a 0644 \"open\n", 1),
        ] {
            match parse(text) {
                Err(Error::Manifest { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn materialization_is_bit_exact() {
        use std::os::unix::fs::PermissionsExt;
        let dir = tempfile::tempdir().unwrap();
        let m = parse("package: a 0 1 1 x\nfile: /etc/a.conf 0640 \"a\\tb\"\ndir: /srv/ro 0555\nfile: /srv/ro/f 0444 -\n").unwrap();
        materialize(&m, dir.path()).unwrap();
        let conf = dir.path().join("etc/a.conf");
        assert_eq!(fs::read(&conf).unwrap(), b"a\tb");
        assert_eq!(fs::metadata(&conf).unwrap().permissions().mode() & 0o7777, 0o640);
        assert_eq!(fs::metadata(dir.path().join("srv/ro")).unwrap().permissions().mode() & 0o7777, 0o555);
        assert!(dir.path().join("srv/ro/f").exists());
    }
}
