//! Filesystem scans behind QC_SEC_5 (world-writable entries) and QC_SEC_6
//! (secrets in world-readable files).

use std::fmt;
use std::fs;
use std::io::Read;
use std::os::unix::fs::PermissionsExt;
use std::path::{Path, PathBuf};

use regex::Regex;
use walkdir::WalkDir;

use crate::error::{Error, Result};

pub const DEFAULT_SECRET_PATTERNS: &[&str] = &[r"(?i)(password|passwd|secret)\w*\s*[:=]\s*\S"];

/// Files larger than this are not read by the secrets scan.
const MAX_SCAN_BYTES: u64 = 8 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FindingKind {
    WorldWritable,
    ReadableSecret,
    MissingLicense,
}

impl FindingKind {
    pub fn label(self) -> &'static str {
        match self {
            FindingKind::WorldWritable => "world-writable",
            FindingKind::ReadableSecret => "readable-secret",
            FindingKind::MissingLicense => "missing-license",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ScanFinding {
    pub path: PathBuf,
    pub kind: FindingKind,
    pub detail: String,
}

impl fmt::Display for ScanFinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t{}", self.path.display(), self.kind.label(), self.detail)
    }
}

/// Findings plus the problems met while walking (unreadable subtrees,
/// skipped files). Problems do not stop the scan.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScanOutcome {
    pub findings: Vec<ScanFinding>,
    pub warnings: Vec<String>,
    pub notes: Vec<String>,
}

fn walk(roots: &[PathBuf], outcome: &mut ScanOutcome, mut visit: impl FnMut(&Path, &fs::Metadata, &mut ScanOutcome)) {
    for root in roots {
        for entry in WalkDir::new(root).follow_links(false).sort_by_file_name() {
            let entry = match entry {
                Ok(e) => e,
                Err(e) => {
                    let path = e.path().map(|p| p.display().to_string()).unwrap_or_default();
                    outcome.warnings.push(format!("unreadable: {path}: {e}"));
                    continue;
                }
            };
            match entry.metadata() {
                Ok(meta) => visit(entry.path(), &meta, outcome),
                Err(e) => outcome.warnings.push(format!("unreadable: {}: {e}", entry.path().display())),
            }
        }
    }
}

/// One finding per regular file or directory with the world-write bit,
/// except sticky directories. Symlinks are not followed.
pub fn scan_world_writable(roots: &[PathBuf]) -> ScanOutcome {
    let mut outcome = ScanOutcome::default();
    walk(roots, &mut outcome, |path, meta, out| {
        let mode = meta.permissions().mode() & 0o7777;
        let candidate = meta.is_file() || meta.is_dir();
        let sticky_dir = meta.is_dir() && mode & 0o1000 != 0;
        if candidate && mode & 0o002 != 0 && !sticky_dir {
            out.findings.push(ScanFinding {
                path: path.to_path_buf(),
                kind: FindingKind::WorldWritable,
                detail: format!("mode {mode:04o}"),
            });
        }
    });
    outcome
}

pub fn compile_patterns(patterns: &[String]) -> Result<Vec<Regex>> {
    patterns
        .iter()
        .map(|p| Regex::new(p).map_err(|e| Error::InvalidProduct(format!("secret pattern '{p}': {e}"))))
        .collect()
}

pub fn default_secret_patterns() -> Vec<String> {
    DEFAULT_SECRET_PATTERNS.iter().map(|s| s.to_string()).collect()
}

/// One finding per world-readable regular file whose text matches any
/// pattern. Binary and oversized files are skipped with a note.
pub fn scan_readable_secrets(roots: &[PathBuf], patterns: &[String]) -> Result<ScanOutcome> {
    let regexes = compile_patterns(patterns)?;
    let mut outcome = ScanOutcome::default();
    walk(roots, &mut outcome, |path, meta, out| {
        if !meta.is_file() || meta.permissions().mode() & 0o004 == 0 {
            return;
        }
        if meta.len() > MAX_SCAN_BYTES {
            out.notes.push(format!("skipped {} (larger than {MAX_SCAN_BYTES} bytes)", path.display()));
            return;
        }
        let mut content = Vec::with_capacity(meta.len() as usize);
        if let Err(e) = fs::File::open(path).and_then(|mut f| f.read_to_end(&mut content)) {
            out.warnings.push(format!("unreadable: {}: {e}", path.display()));
            return;
        }
        if content.contains(&0) {
            out.notes.push(format!("skipped binary file {}", path.display()));
            return;
        }
        let text = String::from_utf8_lossy(&content);
        let hit = text.lines().enumerate().find_map(|(n, line)| {
            regexes
                .iter()
                .find(|r| r.is_match(line))
                .map(|r| (n + 1, r.as_str().to_string()))
        });
        if let Some((line, pattern)) = hit {
            out.findings.push(ScanFinding {
                path: path.to_path_buf(),
                kind: FindingKind::ReadableSecret,
                detail: format!("line {line} matches {pattern}"),
            });
        }
    });
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chmod(path: &Path, mode: u32) {
        fs::set_permissions(path, fs::Permissions::from_mode(mode)).unwrap();
    }

    #[test]
    fn world_writable_examples() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        fs::write(root.join("a"), "x").unwrap();
        chmod(&root.join("a"), 0o644);
        assert!(scan_world_writable(std::slice::from_ref(&root)).findings.is_empty());

        fs::write(root.join("b"), "x").unwrap();
        chmod(&root.join("b"), 0o666);
        fs::create_dir(root.join("tmp")).unwrap();
        chmod(&root.join("tmp"), 0o1777);
        fs::create_dir(root.join("open")).unwrap();
        chmod(&root.join("open"), 0o777);
        let found = scan_world_writable(std::slice::from_ref(&root)).findings;
        let paths: Vec<_> = found.iter().map(|f| f.path.clone()).collect();
        assert_eq!(paths, vec![root.join("b"), root.join("open")]);
        assert_eq!(found[0].detail, "mode 0666");
    }

    #[test]
    fn symlinks_are_not_reported() {
        let dir = tempfile::tempdir().unwrap();
        std::os::unix::fs::symlink("/etc/hostname", dir.path().join("link")).unwrap();
        assert!(scan_world_writable(&[dir.path().to_path_buf()]).findings.is_empty());
    }

    #[test]
    fn secrets_examples() {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let patterns = default_secret_patterns();
        assert!(scan_readable_secrets(std::slice::from_ref(&root), &patterns).unwrap().findings.is_empty());

        let f = root.join("app.conf");
        fs::write(&f, "user = me\npassword = hunter2\n").unwrap();
        chmod(&f, 0o644);
        let out = scan_readable_secrets(std::slice::from_ref(&root), &patterns).unwrap();
        assert_eq!(out.findings.len(), 1);
        assert!(out.findings[0].detail.starts_with("line 2"));

        chmod(&f, 0o600);
        assert!(scan_readable_secrets(&[root], &patterns).unwrap().findings.is_empty());
    }

    #[test]
    fn default_pattern_shapes() {
        let r = Regex::new(DEFAULT_SECRET_PATTERNS[0]).unwrap();
        for hit in ["password = hunter2", "PASSWD: x", "os_password: s3cr3t", "client_secret=abc"] {
            assert!(r.is_match(hit), "{hit}");
        }
        for miss in ["password =", "no credentials here", "the secret garden"] {
            assert!(!r.is_match(miss), "{miss}");
        }
    }

    #[test]
    fn binary_files_are_noted() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("blob");
        fs::write(&f, b"password = x\0\x01").unwrap();
        chmod(&f, 0o644);
        let out = scan_readable_secrets(&[dir.path().to_path_buf()], &default_secret_patterns()).unwrap();
        assert!(out.findings.is_empty());
        assert_eq!(out.notes.len(), 1);
    }

    #[test]
    fn bad_pattern_is_an_error() {
        assert!(scan_readable_secrets(&[], &["(".to_string()]).is_err());
    }
}
