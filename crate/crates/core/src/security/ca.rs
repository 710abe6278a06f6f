//! Throw-away certification authority for services under validation.

use std::fs;
use std::net::IpAddr;
use std::path::{Path, PathBuf};

use openssl::asn1::Asn1Time;
use openssl::bn::{BigNum, MsbOption};
use openssl::hash::MessageDigest;
use openssl::nid::Nid;
use openssl::pkey::{PKey, Private};
use openssl::rsa::Rsa;
use openssl::stack::Stack;
use openssl::x509::extension::{
    AuthorityKeyIdentifier, BasicConstraints, ExtendedKeyUsage, KeyUsage, SubjectAlternativeName,
    SubjectKeyIdentifier,
};
use openssl::x509::store::X509StoreBuilder;
use openssl::x509::{X509Builder, X509NameBuilder, X509StoreContext, X509};

use crate::error::{Error, Result};

pub const DEFAULT_VALIDITY_DAYS: u32 = 7;
const RSA_BITS: u32 = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignatureAlgorithm {
    Sha256WithRsa,
}

impl SignatureAlgorithm {
    fn digest(self) -> MessageDigest {
        match self {
            SignatureAlgorithm::Sha256WithRsa => MessageDigest::sha256(),
        }
    }
}

pub struct CertAuthority {
    pub subject: String,
    pub key_path: PathBuf,
    pub cert_path: PathBuf,
    pub signature_algorithm: SignatureAlgorithm,
    cert: X509,
    key: PKey<Private>,
}

impl std::fmt::Debug for CertAuthority {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CertAuthority")
            .field("subject", &self.subject)
            .field("cert_path", &self.cert_path)
            .finish_non_exhaustive()
    }
}

impl CertAuthority {
    pub fn certificate(&self) -> &X509 {
        &self.cert
    }

    fn certs_dir(&self) -> &Path {
        self.cert_path.parent().unwrap_or(Path::new("."))
    }
}

#[derive(Debug, Clone)]
pub struct IssuedCert {
    pub hostname: String,
    pub cert_path: PathBuf,
    pub key_path: PathBuf,
}

/// Digest family of a certificate signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DigestFamily {
    Sha2,
    /// SHA-1, MD5 and anything else considered weak.
    Weak(String),
    Unknown(String),
}

pub fn digest_family(cert: &X509) -> DigestFamily {
    let nid = cert.signature_algorithm().object().nid();
    let name = nid
        .long_name()
        .map(str::to_string)
        .unwrap_or_else(|_| cert.signature_algorithm().object().to_string());
    let sha2 = [
        Nid::SHA224WITHRSAENCRYPTION,
        Nid::SHA256WITHRSAENCRYPTION,
        Nid::SHA384WITHRSAENCRYPTION,
        Nid::SHA512WITHRSAENCRYPTION,
        Nid::ECDSA_WITH_SHA224,
        Nid::ECDSA_WITH_SHA256,
        Nid::ECDSA_WITH_SHA384,
        Nid::ECDSA_WITH_SHA512,
        Nid::DSA_WITH_SHA224,
        Nid::DSA_WITH_SHA256,
    ];
    let weak = [
        Nid::SHA1WITHRSAENCRYPTION,
        Nid::SHA1WITHRSA,
        Nid::ECDSA_WITH_SHA1,
        Nid::DSAWITHSHA1,
        Nid::MD5WITHRSAENCRYPTION,
        Nid::MD4WITHRSAENCRYPTION,
        Nid::MD2WITHRSAENCRYPTION,
    ];
    if sha2.contains(&nid) {
        DigestFamily::Sha2
    } else if weak.contains(&nid) {
        DigestFamily::Weak(name)
    } else {
        DigestFamily::Unknown(name)
    }
}

pub fn signature_algorithm_name(cert: &X509) -> String {
    let obj = cert.signature_algorithm().object();
    obj.nid()
        .long_name()
        .map(str::to_string)
        .unwrap_or_else(|_| obj.to_string())
}

fn random_serial() -> Result<openssl::asn1::Asn1Integer> {
    let mut bn = BigNum::new()?;
    bn.rand(127, MsbOption::MAYBE_ZERO, false)?;
    Ok(bn.to_asn1_integer()?)
}

fn write_pem(path: &Path, bytes: &[u8], private: bool) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
    if private {
        use std::os::unix::fs::PermissionsExt;
        fs::set_permissions(path, fs::Permissions::from_mode(0o600))
            .map_err(|e| Error::io(format!("chmod {}", path.display()), e))?;
    }
    Ok(())
}

pub fn create_ca(workdir: &Path) -> Result<CertAuthority> {
    create_ca_with_validity(workdir, DEFAULT_VALIDITY_DAYS)
}

/// Generates an RSA-2048 self-signed CA signed with SHA-256 and writes
/// `ca.pem` / `ca.key` under `<workdir>/certs/`.
pub fn create_ca_with_validity(workdir: &Path, days: u32) -> Result<CertAuthority> {
    let dir = workdir.join("certs");
    fs::create_dir_all(&dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let algorithm = SignatureAlgorithm::Sha256WithRsa;

    let key = PKey::from_rsa(Rsa::generate(RSA_BITS)?)?;
    let mut name = X509NameBuilder::new()?;
    name.append_entry_by_nid(Nid::ORGANIZATIONNAME, "qcgate")?;
    name.append_entry_by_nid(Nid::COMMONNAME, "qcgate validation CA")?;
    let name = name.build();

    let mut builder = X509Builder::new()?;
    builder.set_version(2)?;
    let serial = random_serial()?;
    builder.set_serial_number(&serial)?;
    builder.set_subject_name(&name)?;
    builder.set_issuer_name(&name)?;
    builder.set_pubkey(&key)?;
    let not_before = Asn1Time::days_from_now(0)?;
    builder.set_not_before(&not_before)?;
    let not_after = Asn1Time::days_from_now(days)?;
    builder.set_not_after(&not_after)?;
    builder.append_extension(BasicConstraints::new().critical().ca().build()?)?;
    builder.append_extension(KeyUsage::new().critical().key_cert_sign().crl_sign().build()?)?;
    let ski = SubjectKeyIdentifier::new().build(&builder.x509v3_context(None, None))?;
    builder.append_extension(ski)?;
    builder.sign(&key, algorithm.digest())?;
    let cert = builder.build();

    let cert_path = dir.join("ca.pem");
    let key_path = dir.join("ca.key");
    write_pem(&cert_path, &cert.to_pem()?, false)?;
    write_pem(&key_path, &key.private_key_to_pem_pkcs8()?, true)?;

    Ok(CertAuthority {
        subject: "O=qcgate, CN=qcgate validation CA".to_string(),
        key_path,
        cert_path,
        signature_algorithm: algorithm,
        cert,
        key,
    })
}

/// Accepts DNS names (RFC 1123 labels) and IP literals.
pub fn validate_hostname(hostname: &str) -> Result<()> {
    if hostname.parse::<IpAddr>().is_ok() {
        return Ok(());
    }
    let valid = !hostname.is_empty()
        && hostname.len() <= 253
        && hostname.split('.').all(|label| {
            !label.is_empty()
                && label.len() <= 63
                && !label.starts_with('-')
                && !label.ends_with('-')
                && label.bytes().all(|b| b.is_ascii_alphanumeric() || b == b'-')
        });
    if valid {
        Ok(())
    } else {
        Err(Error::InvalidHostname(hostname.to_string()))
    }
}

/// Issues a leaf certificate for `hostname`, writing `<hostname>.pem` and
/// `<hostname>.key` next to the CA files.
pub fn issue_host_cert(ca: &CertAuthority, hostname: &str) -> Result<IssuedCert> {
    validate_hostname(hostname)?;
    let key = PKey::from_rsa(Rsa::generate(RSA_BITS)?)?;
    let mut name = X509NameBuilder::new()?;
    name.append_entry_by_nid(Nid::COMMONNAME, hostname)?;
    let name = name.build();

    let mut builder = X509Builder::new()?;
    builder.set_version(2)?;
    let serial = random_serial()?;
    builder.set_serial_number(&serial)?;
    builder.set_subject_name(&name)?;
    builder.set_issuer_name(ca.cert.subject_name())?;
    builder.set_pubkey(&key)?;
    let not_before = Asn1Time::days_from_now(0)?;
    builder.set_not_before(&not_before)?;
    builder.set_not_after(ca.cert.not_after())?;
    builder.append_extension(BasicConstraints::new().critical().build()?)?;
    builder.append_extension(
        KeyUsage::new()
            .critical()
            .digital_signature()
            .key_encipherment()
            .build()?,
    )?;
    builder.append_extension(ExtendedKeyUsage::new().server_auth().client_auth().build()?)?;
    let mut san = SubjectAlternativeName::new();
    if hostname.parse::<IpAddr>().is_ok() {
        san.ip(hostname);
    } else {
        san.dns(hostname);
    }
    let san = san.build(&builder.x509v3_context(Some(&ca.cert), None))?;
    builder.append_extension(san)?;
    let ski = SubjectKeyIdentifier::new().build(&builder.x509v3_context(Some(&ca.cert), None))?;
    builder.append_extension(ski)?;
    let aki = AuthorityKeyIdentifier::new()
        .keyid(true)
        .build(&builder.x509v3_context(Some(&ca.cert), None))?;
    builder.append_extension(aki)?;
    builder.sign(&ca.key, ca.signature_algorithm.digest())?;
    let cert = builder.build();

    let dir = ca.certs_dir();
    let cert_path = dir.join(format!("{hostname}.pem"));
    let key_path = dir.join(format!("{hostname}.key"));
    write_pem(&cert_path, &cert.to_pem()?, false)?;
    write_pem(&key_path, &key.private_key_to_pem_pkcs8()?, true)?;
    Ok(IssuedCert {
        hostname: hostname.to_string(),
        cert_path,
        key_path,
    })
}

/// Standard path validation of `leaf` against the single trust anchor `ca`.
pub fn verify_chain(leaf: &X509, intermediates: &[X509], ca: &X509) -> std::result::Result<(), String> {
    let mut store = X509StoreBuilder::new().map_err(|e| e.to_string())?;
    store.add_cert(ca.clone()).map_err(|e| e.to_string())?;
    let store = store.build();
    let mut chain = Stack::new().map_err(|e| e.to_string())?;
    for cert in intermediates {
        chain.push(cert.clone()).map_err(|e| e.to_string())?;
    }
    let mut ctx = X509StoreContext::new().map_err(|e| e.to_string())?;
    let mut failure = None;
    let ok = ctx
        .init(&store, leaf, &chain, |c| {
            let ok = c.verify_cert()?;
            if !ok {
                failure = Some(c.error().error_string().to_string());
            }
            Ok(ok)
        })
        .map_err(|e| e.to_string())?;
    if ok {
        Ok(())
    } else {
        Err(failure.unwrap_or_else(|| "verification failed".into()))
    }
}

pub fn load_pem_cert(path: &Path) -> Result<X509> {
    let pem = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    Ok(X509::from_pem(&pem)?)
}

/// DNS and IP entries of the subject-alternative-name extension.
pub fn subject_alt_names(cert: &X509) -> Vec<String> {
    cert.subject_alt_names()
        .map(|names| {
            names
                .iter()
                .filter_map(|n| {
                    n.dnsname().map(str::to_string).or_else(|| {
                        n.ipaddress().and_then(|ip| match ip.len() {
                            4 => Some(IpAddr::from(<[u8; 4]>::try_from(ip).ok()?).to_string()),
                            16 => Some(IpAddr::from(<[u8; 16]>::try_from(ip).ok()?).to_string()),
                            _ => None,
                        })
                    })
                })
                .collect()
        })
        .unwrap_or_default()
}

pub fn is_ca(cert: &X509) -> bool {
    // openssl exposes basic constraints only through the text form
    cert.to_text()
        .map(|t| String::from_utf8_lossy(&t).contains("CA:TRUE"))
        .unwrap_or(false)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ca_is_self_signed_sha256() {
        let dir = tempfile::tempdir().unwrap();
        let ca = create_ca(dir.path()).unwrap();
        let cert = load_pem_cert(&ca.cert_path).unwrap();
        assert!(verify_chain(&cert, &[], &cert).is_ok());
        assert_eq!(digest_family(&cert), DigestFamily::Sha2);
        assert!(signature_algorithm_name(&cert).contains("sha256"));
        assert!(is_ca(&cert));
    }

    #[test]
    fn distinct_serials_and_keys() {
        let dir = tempfile::tempdir().unwrap();
        let a = create_ca(&dir.path().join("a")).unwrap();
        let b = create_ca(&dir.path().join("b")).unwrap();
        let sa = a.certificate().serial_number().to_bn().unwrap();
        let sb = b.certificate().serial_number().to_bn().unwrap();
        assert_ne!(sa, sb);
        assert_ne!(
            a.certificate().public_key().unwrap().public_key_to_pem().unwrap(),
            b.certificate().public_key().unwrap().public_key_to_pem().unwrap()
        );
    }

    #[test]
    fn leaf_chains_to_its_ca_only() {
        let dir = tempfile::tempdir().unwrap();
        let ca = create_ca(&dir.path().join("one")).unwrap();
        let other = create_ca(&dir.path().join("two")).unwrap();
        let issued = issue_host_cert(&ca, "localhost").unwrap();
        let leaf = load_pem_cert(&issued.cert_path).unwrap();
        assert!(verify_chain(&leaf, &[], ca.certificate()).is_ok());
        assert!(verify_chain(&leaf, &[], other.certificate()).is_err());
        assert_eq!(subject_alt_names(&leaf), vec!["localhost".to_string()]);
        assert_eq!(digest_family(&leaf), DigestFamily::Sha2);
        assert!(!is_ca(&leaf));
    }

    #[test]
    fn ip_hostnames_go_into_ip_san() {
        let dir = tempfile::tempdir().unwrap();
        let ca = create_ca(dir.path()).unwrap();
        let issued = issue_host_cert(&ca, "127.0.0.1").unwrap();
        let leaf = load_pem_cert(&issued.cert_path).unwrap();
        assert_eq!(subject_alt_names(&leaf), vec!["127.0.0.1".to_string()]);
    }

    #[test]
    fn hostname_syntax() {
        assert!(validate_hostname("fts.example.org").is_ok());
        assert!(validate_hostname("localhost").is_ok());
        for bad in ["", "-bad.org", "a..b", "under_score.org", "sp ace"] {
            assert!(matches!(validate_hostname(bad), Err(Error::InvalidHostname(_))), "{bad}");
        }
    }
}
