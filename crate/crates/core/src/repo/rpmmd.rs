//! `repodata/repomd.xml` and `primary.xml` reading and writing.

use std::io::{Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use quick_xml::events::{BytesStart, Event};
use quick_xml::escape::escape;
use quick_xml::Reader;
use sha2::{Digest, Sha256};

use super::evr::{Evr, Relation, VersionConstraint};
use super::package::{Dependency, Package};
use super::RepoError;

/// The `primary` entry of a repomd document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimaryLocation {
    pub href: String,
    pub checksum_type: String,
    pub checksum: String,
}

fn xml_error(offset: u64, err: impl std::fmt::Display) -> RepoError {
    RepoError::Parse {
        offset,
        message: err.to_string(),
    }
}

fn attr(start: &BytesStart<'_>, key: &[u8]) -> Result<Option<String>, RepoError> {
    for a in start.attributes() {
        let a = a.map_err(|e| xml_error(0, e))?;
        if a.key.local_name().as_ref() == key {
            let v = a.unescape_value().map_err(|e| xml_error(0, e))?;
            return Ok(Some(v.into_owned()));
        }
    }
    Ok(None)
}

pub fn parse_repomd(xml: &[u8]) -> Result<PrimaryLocation, RepoError> {
    let mut reader = Reader::from_reader(xml);
    let mut buf = Vec::new();
    let mut in_primary = false;
    let mut in_checksum = false;
    let mut href = None;
    let mut checksum_type = None;
    let mut checksum = String::new();
    loop {
        let offset = reader.buffer_position();
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| xml_error(offset, e))?;
        match event {
            Event::Start(e) | Event::Empty(e) => match e.local_name().as_ref() {
                b"data" => in_primary = attr(&e, b"type")?.as_deref() == Some("primary"),
                b"checksum" if in_primary => {
                    checksum_type = attr(&e, b"type")?;
                    in_checksum = true;
                }
                b"location" if in_primary => href = attr(&e, b"href")?,
                _ => {}
            },
            Event::Text(t) if in_checksum => {
                let text = t.unescape().map_err(|e| xml_error(offset, e))?;
                checksum.push_str(text.trim());
            }
            Event::End(e) => match e.local_name().as_ref() {
                b"checksum" => in_checksum = false,
                b"data" if in_primary => break,
                _ => {}
            },
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    match (href, checksum_type) {
        (Some(href), Some(checksum_type)) if !checksum.is_empty() => Ok(PrimaryLocation {
            href,
            checksum_type,
            checksum,
        }),
        _ => Err(RepoError::Parse {
            offset: 0,
            message: "repomd.xml has no primary entry with location and checksum".into(),
        }),
    }
}

/// Verifies `data` against a hex digest of the named algorithm.
pub fn verify_checksum(kind: &str, expected: &str, data: &[u8]) -> Result<(), RepoError> {
    let actual = match kind {
        "sha256" => hex::encode(Sha256::digest(data)),
        "sha512" => hex::encode(sha2::Sha512::digest(data)),
        "sha384" => hex::encode(sha2::Sha384::digest(data)),
        "sha224" => hex::encode(sha2::Sha224::digest(data)),
        "sha1" | "sha" => hex::encode(sha1::Sha1::digest(data)),
        other => {
            return Err(RepoError::Parse {
                offset: 0,
                message: format!("unsupported checksum type '{other}'"),
            })
        }
    };
    if actual.eq_ignore_ascii_case(expected) {
        Ok(())
    } else {
        Err(RepoError::ChecksumMismatch {
            expected: expected.to_string(),
            actual,
        })
    }
}

/// Transparently gunzips `data` if it carries the gzip magic.
pub fn decompress(data: Vec<u8>) -> Result<Vec<u8>, RepoError> {
    if data.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(&data[..])
            .read_to_end(&mut out)
            .map_err(|e| RepoError::Parse {
                offset: 0,
                message: format!("gzip: {e}"),
            })?;
        Ok(out)
    } else if data.starts_with(&[0xfd, b'7', b'z', b'X', b'Z']) || data.starts_with(&[0x28, 0xb5, 0x2f, 0xfd]) {
        Err(RepoError::Parse {
            offset: 0,
            message: "unsupported compression (only gzip is handled)".into(),
        })
    } else {
        Ok(data)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Field {
    None,
    Name,
    Arch,
    License,
    File,
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Other,
    Provides,
    Requires,
}

#[derive(Default)]
struct PackageBuilder {
    name: String,
    arch: String,
    evr: Evr,
    license: Option<String>,
    provides: Vec<VersionConstraint>,
    requires: Vec<Dependency>,
    files: Vec<String>,
}

fn entry_constraint(e: &BytesStart<'_>) -> Result<Option<VersionConstraint>, RepoError> {
    let Some(name) = attr(e, b"name")? else {
        return Ok(None);
    };
    let relation = attr(e, b"flags")?.as_deref().and_then(Relation::from_rpm_flag);
    let ver = attr(e, b"ver")?;
    Ok(Some(match (relation, ver) {
        (Some(rel), Some(ver)) => {
            let epoch = attr(e, b"epoch")?.and_then(|s| s.parse().ok()).unwrap_or(0);
            let rel_str = attr(e, b"rel")?.unwrap_or_default();
            VersionConstraint::versioned(name, rel, Evr::new(epoch, ver, rel_str))
        }
        _ => VersionConstraint::any(name),
    }))
}

/// Parses a (decompressed) `primary.xml` document.
pub fn parse_primary(xml: &[u8]) -> Result<Vec<Package>, RepoError> {
    let mut reader = Reader::from_reader(xml);
    let mut buf = Vec::new();
    let mut packages = Vec::new();
    let mut current: Option<PackageBuilder> = None;
    let mut field = Field::None;
    let mut section = Section::Other;
    let mut text = String::new();

    loop {
        let offset = reader.buffer_position();
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| xml_error(offset, e))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let empty = matches!(event, Event::Empty(_));
                let local = e.local_name();
                match (local.as_ref(), current.as_mut()) {
                    (b"package", None) => current = Some(PackageBuilder::default()),
                    (b"package", Some(_)) => return Err(xml_error(offset, "nested <package>")),
                    (_, None) => {}
                    (b"name", Some(_)) if section == Section::Other => field = Field::Name,
                    (b"arch", Some(_)) => field = Field::Arch,
                    (b"license", Some(_)) => field = Field::License,
                    (b"file", Some(_)) => field = Field::File,
                    (b"version", Some(pkg)) => {
                        pkg.evr = Evr::new(
                            attr(e, b"epoch")?.and_then(|s| s.parse().ok()).unwrap_or(0),
                            attr(e, b"ver")?.unwrap_or_default(),
                            attr(e, b"rel")?.unwrap_or_default(),
                        );
                    }
                    (b"provides", Some(_)) if !empty => section = Section::Provides,
                    (b"requires", Some(_)) if !empty => section = Section::Requires,
                    (b"entry", Some(pkg)) => {
                        if let Some(c) = entry_constraint(e)? {
                            match section {
                                Section::Provides => pkg.provides.push(c),
                                Section::Requires if !c.name.starts_with("rpmlib(") => {
                                    pkg.requires.push(Dependency::single(c))
                                }
                                _ => {}
                            }
                        }
                    }
                    (_, Some(_)) if !empty && e.name().as_ref().starts_with(b"rpm:") => {
                        // conflicts, obsoletes and the weak dependency lists
                        section = Section::Other;
                    }
                    _ => {}
                }
                if field != Field::None && empty {
                    field = Field::None;
                }
                text.clear();
            }
            Event::Text(t) if field != Field::None => {
                text.push_str(&t.unescape().map_err(|e| xml_error(offset, e))?);
            }
            Event::CData(t) if field != Field::None => {
                text.push_str(&String::from_utf8_lossy(&t));
            }
            Event::End(e) => {
                let local = e.local_name();
                if let Some(pkg) = current.as_mut() {
                    let value = text.trim().to_string();
                    match (local.as_ref(), field) {
                        (b"name", Field::Name) => pkg.name = value,
                        (b"arch", Field::Arch) => pkg.arch = value,
                        (b"license", Field::License) if !value.is_empty() => pkg.license = Some(value),
                        (b"file", Field::File) => pkg.files.push(value),
                        (b"provides" | b"requires", _) => section = Section::Other,
                        (b"conflicts" | b"obsoletes" | b"recommends" | b"suggests" | b"supplements" | b"enhances", _) => {
                            section = Section::Other
                        }
                        (b"package", _) => {
                            let b = current.take().unwrap_or_default();
                            if b.name.is_empty() {
                                return Err(xml_error(offset, "package without <name>"));
                            }
                            if b.evr.version.is_empty() {
                                return Err(xml_error(offset, format!("package {} without version", b.name)));
                            }
                            let mut pkg = Package::new(b.name, b.evr, b.arch);
                            pkg.provides.extend(b.provides);
                            pkg.provides.dedup();
                            pkg.ensure_self_provide();
                            pkg.requires = b.requires;
                            pkg.file_list = b.files;
                            pkg.license = b.license;
                            packages.push(pkg);
                        }
                        _ => {}
                    }
                }
                field = Field::None;
                text.clear();
            }
            Event::Eof => break,
            _ => {}
        }
        buf.clear();
    }
    if current.is_some() {
        return Err(xml_error(reader.buffer_position(), "unterminated <package>"));
    }
    Ok(packages)
}

fn write_entry(out: &mut String, c: &VersionConstraint) {
    out.push_str(&format!("        <rpm:entry name=\"{}\"", escape(c.name.as_str())));
    if let (Some(flag), Some(evr)) = (c.relation.rpm_flag(), &c.evr) {
        out.push_str(&format!(
            " flags=\"{flag}\" epoch=\"{}\" ver=\"{}\"",
            evr.epoch,
            escape(evr.version.as_str())
        ));
        if !evr.release.is_empty() {
            out.push_str(&format!(" rel=\"{}\"", escape(evr.release.as_str())));
        }
    }
    out.push_str("/>\n");
}

/// Serializes packages as a `primary.xml` document.
pub fn write_primary(packages: &[Package]) -> String {
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&format!(
        "<metadata xmlns=\"http://linux.duke.edu/metadata/common\" xmlns:rpm=\"http://linux.duke.edu/metadata/rpm\" packages=\"{}\">\n",
        packages.len()
    ));
    for p in packages {
        out.push_str("<package type=\"rpm\">\n");
        out.push_str(&format!("  <name>{}</name>\n", escape(p.name.as_str())));
        out.push_str(&format!("  <arch>{}</arch>\n", escape(p.architecture.as_str())));
        out.push_str(&format!(
            "  <version epoch=\"{}\" ver=\"{}\" rel=\"{}\"/>\n",
            p.evr.epoch,
            escape(p.evr.version.as_str()),
            escape(p.evr.release.as_str())
        ));
        out.push_str("  <format>\n");
        if let Some(license) = &p.license {
            out.push_str(&format!("    <rpm:license>{}</rpm:license>\n", escape(license.as_str())));
        }
        out.push_str("    <rpm:provides>\n");
        for c in &p.provides {
            write_entry(&mut out, c);
        }
        out.push_str("    </rpm:provides>\n");
        if !p.requires.is_empty() {
            out.push_str("    <rpm:requires>\n");
            for dep in &p.requires {
                for c in &dep.alternatives {
                    write_entry(&mut out, c);
                }
            }
            out.push_str("    </rpm:requires>\n");
        }
        for f in &p.file_list {
            out.push_str(&format!("    <file>{}</file>\n", escape(f.as_str())));
        }
        out.push_str("  </format>\n");
        out.push_str("</package>\n");
    }
    out.push_str("</metadata>\n");
    out
}

/// Writes a complete repository (`repodata/repomd.xml` plus a gzip
/// compressed primary document) under `root`.
pub fn write_repository(root: &Path, packages: &[Package]) -> std::io::Result<()> {
    let repodata = root.join("repodata");
    std::fs::create_dir_all(&repodata)?;
    let primary = write_primary(packages);
    let mut gz = GzEncoder::new(Vec::new(), flate2::Compression::default());
    gz.write_all(primary.as_bytes())?;
    let compressed = gz.finish()?;
    let digest = hex::encode(Sha256::digest(&compressed));
    let open_digest = hex::encode(Sha256::digest(primary.as_bytes()));
    let file_name = format!("{digest}-primary.xml.gz");
    std::fs::write(repodata.join(&file_name), &compressed)?;
    let repomd = format!(
        "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n\
<repomd xmlns=\"http://linux.duke.edu/metadata/repo\" xmlns:rpm=\"http://linux.duke.edu/metadata/rpm\">\n\
  <revision>1</revision>\n\
  <data type=\"primary\">\n\
    <checksum type=\"sha256\">{digest}</checksum>\n\
    <open-checksum type=\"sha256\">{open_digest}</open-checksum>\n\
    <location href=\"repodata/{file_name}\"/>\n\
    <size>{}</size>\n\
    <open-size>{}</open-size>\n\
  </data>\n\
</repomd>\n",
        compressed.len(),
        primary.len()
    );
    std::fs::write(repodata.join("repomd.xml"), repomd)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PRIMARY: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<metadata xmlns="http://linux.duke.edu/metadata/common" xmlns:rpm="http://linux.duke.edu/metadata/rpm" packages="2">
<package type="rpm">
  <name>fts-server</name>
  <arch>x86_64</arch>
  <version epoch="0" ver="3.7.8" rel="1.el7"/>
  <checksum type="sha256" pkgid="YES">abc</checksum>
  <summary>FTS server</summary>
  <format>
    <rpm:license>ASL 2.0</rpm:license>
    <rpm:provides>
      <rpm:entry name="fts-server" flags="EQ" epoch="0" ver="3.7.8" rel="1.el7"/>
      <rpm:entry name="config(fts-server)" flags="EQ" epoch="0" ver="3.7.8" rel="1.el7"/>
    </rpm:provides>
    <rpm:requires>
      <rpm:entry name="rpmlib(CompressedFileNames)" flags="LE" epoch="0" ver="3.0.4" rel="1" pre="1"/>
      <rpm:entry name="fts-libs" flags="EQ" epoch="0" ver="3.7.8" rel="1.el7"/>
      <rpm:entry name="/bin/sh"/>
    </rpm:requires>
    <rpm:conflicts>
      <rpm:entry name="old-fts"/>
    </rpm:conflicts>
    <file>/usr/sbin/fts_server</file>
  </format>
</package>
<package type="rpm">
  <name>fts-libs</name>
  <arch>x86_64</arch>
  <version epoch="1" ver="3.7.8" rel="1.el7"/>
  <format/>
</package>
</metadata>"#;

    #[test]
    fn parses_primary_entries() {
        let pkgs = parse_primary(PRIMARY.as_bytes()).unwrap();
        assert_eq!(pkgs.len(), 2);
        let server = &pkgs[0];
        assert_eq!(server.name, "fts-server");
        assert_eq!(server.evr, Evr::new(0, "3.7.8", "1.el7"));
        assert_eq!(server.license.as_deref(), Some("ASL 2.0"));
        assert_eq!(server.provides.len(), 2);
        assert_eq!(server.requires.len(), 2, "rpmlib() filtered, conflicts ignored");
        assert_eq!(server.requires[1].alternatives[0], VersionConstraint::any("/bin/sh"));
        assert_eq!(server.file_list, vec!["/usr/sbin/fts_server"]);

        let libs = &pkgs[1];
        assert_eq!(libs.evr.epoch, 1);
        assert_eq!(libs.provides, vec![libs.self_provide()], "self-provide synthesized");
    }

    #[test]
    fn malformed_xml_reports_offset() {
        let err = parse_primary(b"<metadata><package><name>x</name></wrong></metadata>").unwrap_err();
        assert!(matches!(err, RepoError::Parse { .. }), "{err}");
    }

    #[test]
    fn empty_metadata_is_fine() {
        let xml = r#"<metadata xmlns="http://linux.duke.edu/metadata/common" packages="0"></metadata>"#;
        assert!(parse_primary(xml.as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn write_then_parse_round_trip() {
        let pkgs = parse_primary(PRIMARY.as_bytes()).unwrap();
        let again = parse_primary(write_primary(&pkgs).as_bytes()).unwrap();
        assert_eq!(pkgs, again);
    }

    #[test]
    fn repomd_primary_location() {
        let dir = tempfile::tempdir().unwrap();
        let pkgs = parse_primary(PRIMARY.as_bytes()).unwrap();
        write_repository(dir.path(), &pkgs).unwrap();
        let repomd = std::fs::read(dir.path().join("repodata/repomd.xml")).unwrap();
        let loc = parse_repomd(&repomd).unwrap();
        assert_eq!(loc.checksum_type, "sha256");
        let data = std::fs::read(dir.path().join(&loc.href)).unwrap();
        verify_checksum(&loc.checksum_type, &loc.checksum, &data).unwrap();
        assert!(verify_checksum("sha256", &loc.checksum, b"tampered").is_err());
        assert_eq!(parse_primary(&decompress(data).unwrap()).unwrap(), pkgs);
    }
}
