//! Debian `Packages` index stanzas.

use super::evr::{Evr, Relation, VersionConstraint};
use super::package::{Dependency, Package};
use super::RepoError;

struct Stanza {
    offset: u64,
    fields: Vec<(String, String)>,
}

impl Stanza {
    fn get(&self, key: &str) -> Option<&str> {
        self.fields
            .iter()
            .find(|(k, _)| k.eq_ignore_ascii_case(key))
            .map(|(_, v)| v.as_str())
    }
}

fn parse_error(offset: u64, message: impl Into<String>) -> RepoError {
    RepoError::Parse {
        offset,
        message: message.into(),
    }
}

fn split_stanzas(text: &str) -> Result<Vec<Stanza>, RepoError> {
    let mut stanzas = Vec::new();
    let mut current: Option<Stanza> = None;
    let mut offset = 0u64;
    for raw in text.split_inclusive('\n') {
        let line_offset = offset;
        offset += raw.len() as u64;
        let line = raw.trim_end_matches(['\n', '\r']);
        if line.trim().is_empty() {
            if let Some(s) = current.take() {
                stanzas.push(s);
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        if line.starts_with([' ', '\t']) {
            let stanza = current
                .as_mut()
                .ok_or_else(|| parse_error(line_offset, "continuation line outside a stanza"))?;
            let (_, value) = stanza
                .fields
                .last_mut()
                .ok_or_else(|| parse_error(line_offset, "continuation line before any field"))?;
            value.push('\n');
            value.push_str(line.trim());
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| parse_error(line_offset, format!("expected 'Field: value', got '{line}'")))?;
        if key.is_empty() || key.contains(char::is_whitespace) {
            return Err(parse_error(line_offset, format!("invalid field name '{key}'")));
        }
        current
            .get_or_insert_with(|| Stanza {
                offset: line_offset,
                fields: Vec::new(),
            })
            .fields
            .push((key.to_string(), value.trim().to_string()));
    }
    if let Some(s) = current.take() {
        stanzas.push(s);
    }
    Ok(stanzas)
}

/// Parses one relation such as `libc6 (>= 2.17)` or `python3:any`.
pub fn parse_relation(text: &str) -> Result<VersionConstraint, String> {
    let text = text.trim();
    let (head, version) = match text.split_once('(') {
        Some((head, rest)) => {
            let inner = rest
                .strip_suffix(')')
                .or_else(|| rest.split_once(')').map(|(v, _)| v))
                .ok_or_else(|| format!("unbalanced parenthesis in '{text}'"))?;
            (head.trim(), Some(inner.trim()))
        }
        None => (text, None),
    };
    // drop architecture restrictions ("[amd64]") and build profiles ("<!nocheck>")
    let head = head.split(['[', '<']).next().unwrap_or("").trim();
    let name = head.split(':').next().unwrap_or("").trim();
    if name.is_empty() {
        return Err(format!("missing package name in '{text}'"));
    }
    match version {
        None => Ok(VersionConstraint::any(name)),
        Some(v) => {
            let op_len = v.find(|c: char| !matches!(c, '<' | '>' | '=')).unwrap_or(v.len());
            let (op, ver) = v.split_at(op_len);
            let relation = Relation::from_deb_operator(op.trim())
                .ok_or_else(|| format!("unknown relation operator '{op}' in '{text}'"))?;
            let ver = ver.trim();
            if ver.is_empty() {
                return Err(format!("missing version in '{text}'"));
            }
            Ok(VersionConstraint::versioned(name, relation, Evr::parse_deb(ver)))
        }
    }
}

fn parse_depends(value: &str) -> Result<Vec<Dependency>, String> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|group| {
            group
                .split('|')
                .map(parse_relation)
                .collect::<Result<Vec<_>, _>>()
                .map(Dependency::group)
        })
        .collect()
}

/// Parses a (decompressed) `Packages` file.
pub fn parse_packages(text: &str) -> Result<Vec<Package>, RepoError> {
    let mut packages = Vec::new();
    for stanza in split_stanzas(text)? {
        let at = |msg: String| parse_error(stanza.offset, msg);
        let name = stanza
            .get("Package")
            .ok_or_else(|| at("stanza without Package field".into()))?;
        let version = stanza
            .get("Version")
            .ok_or_else(|| at(format!("package {name} without Version field")))?;
        let arch = stanza.get("Architecture").unwrap_or("all");
        let mut pkg = Package::new(name, Evr::parse_deb(version), arch);
        if let Some(provides) = stanza.get("Provides") {
            for entry in provides.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                pkg.provides.push(parse_relation(entry).map_err(&at)?);
            }
        }
        for key in ["Pre-Depends", "Depends"] {
            if let Some(value) = stanza.get(key) {
                pkg.requires.extend(parse_depends(value).map_err(&at)?);
            }
        }
        pkg.license = stanza.get("License").map(str::to_string);
        packages.push(pkg);
    }
    Ok(packages)
}

fn format_relation(c: &VersionConstraint) -> String {
    match (&c.evr, c.relation.deb_operator()) {
        (Some(evr), Some(op)) => format!("{} ({op} {evr})", c.name),
        _ => c.name.clone(),
    }
}

/// Serializes packages as a `Packages` file. Requirements are written to
/// `Depends`; the synthesized self-provide is omitted.
pub fn write_packages(packages: &[Package]) -> String {
    let mut out = String::new();
    for (i, p) in packages.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str(&format!("Package: {}\n", p.name));
        out.push_str(&format!("Version: {}\n", p.evr));
        out.push_str(&format!("Architecture: {}\n", p.architecture));
        let own = p.self_provide();
        let provides: Vec<String> = p
            .provides
            .iter()
            .filter(|c| **c != own)
            .map(format_relation)
            .collect();
        if !provides.is_empty() {
            out.push_str(&format!("Provides: {}\n", provides.join(", ")));
        }
        if !p.requires.is_empty() {
            let groups: Vec<String> = p
                .requires
                .iter()
                .map(|d| d.alternatives.iter().map(format_relation).collect::<Vec<_>>().join(" | "))
                .collect();
            out.push_str(&format!("Depends: {}\n", groups.join(", ")));
        }
        if let Some(license) = &p.license {
            out.push_str(&format!("License: {license}\n"));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depends_with_alternatives() {
        let text = "Package: cloud-info-provider\nVersion: 0.10.3-1\nArchitecture: all\nDepends: a (>= 1.0), b | c\n";
        let pkgs = parse_packages(text).unwrap();
        assert_eq!(pkgs.len(), 1);
        let req = &pkgs[0].requires;
        assert_eq!(req.len(), 2);
        assert_eq!(
            req[0],
            Dependency::single(VersionConstraint::versioned("a", Relation::Ge, Evr::new(0, "1.0", "")))
        );
        assert_eq!(
            req[1],
            Dependency::group(vec![VersionConstraint::any("b"), VersionConstraint::any("c")])
        );
    }

    #[test]
    fn continuation_lines_and_provides() {
        let text = "Package: mta\nVersion: 1:2.0\nArchitecture: amd64\nProvides: mail-transport-agent, libfoo (= 3)\nDepends: libc6 (>= 2.17) [amd64],\n python3:any\nDescription: short\n long line\n .\n\nPackage: other\nVersion: 1\n";
        let pkgs = parse_packages(text).unwrap();
        assert_eq!(pkgs.len(), 2);
        let mta = &pkgs[0];
        assert_eq!(mta.evr.epoch, 1);
        assert_eq!(mta.provides.len(), 3);
        assert_eq!(mta.provides[1], VersionConstraint::any("mail-transport-agent"));
        assert_eq!(mta.requires.len(), 2);
        assert_eq!(mta.requires[1].alternatives[0], VersionConstraint::any("python3"));
        assert_eq!(pkgs[1].architecture, "all");
    }

    #[test]
    fn errors_carry_offsets() {
        let err = parse_packages("Package: a\nVersion: 1\n\nVersion: 2\n").unwrap_err();
        match err {
            RepoError::Parse { offset, .. } => assert_eq!(offset, 23),
            other => panic!("{other}"),
        }
        assert!(parse_packages("Package: a\nVersion: 1\nDepends: b (~~ 1)\n").is_err());
        assert!(parse_packages("garbage line\n").is_err());
    }

    #[test]
    fn empty_index() {
        assert!(parse_packages("").unwrap().is_empty());
    }

    #[test]
    fn write_round_trip() {
        let text = "Package: a\nVersion: 2:1.0~rc1-3\nArchitecture: amd64\nProvides: virt (= 1.0)\nDepends: b (<< 2), c | d (>= 1:0.5)\n";
        let pkgs = parse_packages(text).unwrap();
        assert_eq!(parse_packages(&write_packages(&pkgs)).unwrap(), pkgs);
    }
}
