//! Content-record LDIF as produced by `ldapsearch -LLL`.
//!
//! Supports folded lines, `::` base64 values, comments and the `version:`
//! header. Change records and `:<` URL values are rejected.

use base64::engine::general_purpose::STANDARD;
use base64::Engine;

use crate::error::{Error, Result};

const FOLD_WIDTH: usize = 76;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LdifEntry {
    pub dn: String,
    /// Attribute name and value pairs in document order; names may repeat.
    pub attributes: Vec<(String, String)>,
}

impl LdifEntry {
    pub fn new(dn: impl Into<String>) -> Self {
        LdifEntry {
            dn: dn.into(),
            attributes: Vec::new(),
        }
    }

    pub fn with(mut self, name: &str, value: &str) -> Self {
        self.attributes.push((name.to_string(), value.to_string()));
        self
    }

    /// Values of `name`, compared case-insensitively as LDAP does.
    pub fn values<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.attributes
            .iter()
            .filter(move |(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LdifDocument {
    pub entries: Vec<LdifEntry>,
}

impl LdifDocument {
    pub fn values<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.entries.iter().flat_map(move |e| e.values(name))
    }
}

fn ldif_error(line: usize, message: impl Into<String>) -> Error {
    Error::Ldif {
        line,
        message: message.into(),
    }
}

/// Logical lines with the physical line number each starts at.
fn unfold(text: &str) -> Vec<(usize, String)> {
    let mut out: Vec<(usize, String)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        if let Some(cont) = raw.strip_prefix(' ') {
            if let Some((_, last)) = out.last_mut() {
                if !last.is_empty() {
                    last.push_str(cont);
                    continue;
                }
            }
        }
        out.push((idx + 1, raw.to_string()));
    }
    out
}

fn parse_line(line_no: usize, line: &str) -> Result<(String, String)> {
    let colon = line
        .find(':')
        .ok_or_else(|| ldif_error(line_no, format!("expected 'name: value', got '{line}'")))?;
    let name = line[..colon].trim_end();
    if name.is_empty() {
        return Err(ldif_error(line_no, "empty attribute name"));
    }
    if !name
        .bytes()
        .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b';' || b == b'.')
    {
        return Err(ldif_error(line_no, format!("invalid attribute name '{name}'")));
    }
    let rest = &line[colon + 1..];
    let value = if let Some(encoded) = rest.strip_prefix(':') {
        let bytes = STANDARD
            .decode(encoded.trim())
            .map_err(|e| ldif_error(line_no, format!("bad base64 value: {e}")))?;
        String::from_utf8(bytes).map_err(|_| ldif_error(line_no, "base64 value is not UTF-8"))?
    } else if rest.starts_with('<') {
        return Err(ldif_error(line_no, "URL values are not supported"));
    } else {
        rest.strip_prefix(' ').unwrap_or(rest).to_string()
    };
    Ok((name.to_string(), value))
}

pub fn parse_ldif(text: &str) -> Result<LdifDocument> {
    let mut doc = LdifDocument::default();
    let mut current: Option<LdifEntry> = None;
    let mut seen_content = false;

    for (line_no, line) in unfold(text) {
        if line.is_empty() {
            if let Some(entry) = current.take() {
                doc.entries.push(entry);
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let (name, value) = parse_line(line_no, &line)?;
        match current.as_mut() {
            None => {
                if name.eq_ignore_ascii_case("version") && !seen_content {
                    seen_content = true;
                    continue;
                }
                if !name.eq_ignore_ascii_case("dn") {
                    return Err(ldif_error(line_no, format!("entry must start with dn, got '{name}'")));
                }
                seen_content = true;
                current = Some(LdifEntry::new(value));
            }
            Some(entry) => {
                if name.eq_ignore_ascii_case("dn") {
                    return Err(ldif_error(line_no, "second dn in one entry"));
                }
                if name.eq_ignore_ascii_case("changetype") {
                    return Err(ldif_error(line_no, "change records are not supported"));
                }
                entry.attributes.push((name, value));
            }
        }
    }
    if let Some(entry) = current {
        doc.entries.push(entry);
    }
    Ok(doc)
}

fn needs_base64(value: &str) -> bool {
    let Some(first) = value.bytes().next() else {
        return false;
    };
    matches!(first, b' ' | b':' | b'<')
        || value.ends_with(' ')
        || value.bytes().any(|b| b == b'\n' || b == b'\r' || b == 0 || !b.is_ascii())
}

fn push_folded(out: &mut String, line: &str) {
    let mut rest = line;
    let mut width = FOLD_WIDTH;
    loop {
        if rest.len() <= width {
            out.push_str(rest);
            out.push('\n');
            return;
        }
        let mut cut = width;
        while !rest.is_char_boundary(cut) {
            cut -= 1;
        }
        out.push_str(&rest[..cut]);
        out.push_str("\n ");
        rest = &rest[cut..];
        width = FOLD_WIDTH - 1;
    }
}

/// Serializes `doc`, folding long lines and base64-encoding unsafe values.
pub fn write_ldif(doc: &LdifDocument) -> String {
    let mut out = String::new();
    let attr = |name: &str, value: &str| {
        if needs_base64(value) {
            format!("{name}:: {}", STANDARD.encode(value))
        } else {
            format!("{name}: {value}")
        }
    };
    for (i, entry) in doc.entries.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        push_folded(&mut out, &attr("dn", &entry.dn));
        for (name, value) in &entry.attributes {
            push_folded(&mut out, &attr(name, value));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_entries() {
        let text = "dn: o=glue\nobjectClass: organization\n\ndn: GLUE2GroupID=resource,o=glue\nobjectClass: GLUE2Group\n\n# comment\ndn: GLUE2ServiceID=svc,GLUE2GroupID=resource,o=glue\nGLUE2EntityOtherInfo: MiddlewareVersion=3.1.0\nGLUE2EntityOtherInfo: MiddlewareName=x\n";
        let doc = parse_ldif(text).unwrap();
        assert_eq!(doc.entries.len(), 3);
        assert_eq!(doc.entries[2].values("glue2entityotherinfo").count(), 2);
    }

    #[test]
    fn folded_values_are_reassembled() {
        let doc = parse_ldif("dn: cn=a,\n o=glue\ndescription: one\n  two\n").unwrap();
        assert_eq!(doc.entries[0].dn, "cn=a,o=glue");
        assert_eq!(doc.entries[0].attributes[0].1, "one two");
    }

    #[test]
    fn base64_values() {
        let doc = parse_ldif("dn:: Y249w6ksbz1nbHVl\ncn:: w6k=\n").unwrap();
        assert_eq!(doc.entries[0].dn, "cn=é,o=glue");
        assert_eq!(doc.entries[0].attributes[0].1, "é");
    }

    #[test]
    fn rejected_constructs() {
        let err = parse_ldif("dn: cn=a\nchangetype: add\n").unwrap_err();
        assert!(matches!(err, Error::Ldif { line: 2, .. }), "{err}");
        assert!(parse_ldif("cn: orphan\n").is_err());
        assert!(parse_ldif("dn: cn=a\njpegPhoto:< file:///x\n").is_err());
        assert!(matches!(parse_ldif("dn: a\nno colon\n"), Err(Error::Ldif { line: 2, .. })));
    }

    #[test]
    fn version_header_and_empty() {
        assert_eq!(parse_ldif("version: 1\n\ndn: a\n").unwrap().entries.len(), 1);
        assert!(parse_ldif("").unwrap().entries.is_empty());
    }

    #[test]
    fn write_round_trip() {
        let long = "x".repeat(200);
        let doc = LdifDocument {
            entries: vec![
                LdifEntry::new("o=glue").with("description", &long).with("note", " leading"),
                LdifEntry::new("cn=é,o=glue").with("cn", "é").with("cn", "e"),
            ],
        };
        let text = write_ldif(&doc);
        assert!(text.lines().all(|l| l.len() <= FOLD_WIDTH));
        assert_eq!(parse_ldif(&text).unwrap(), doc);
    }
}
