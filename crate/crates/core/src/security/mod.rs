//! Built-in security and operations assessments.

pub mod ca;
pub mod license;
pub mod scan;
pub mod support;
pub mod tls;

pub use ca::{
    create_ca, digest_family, issue_host_cert, verify_chain, CertAuthority, DigestFamily, IssuedCert,
    SignatureAlgorithm,
};
pub use license::check_license;
pub use scan::{
    default_secret_patterns, scan_readable_secrets, scan_world_writable, FindingKind, ScanFinding, ScanOutcome,
};
pub use support::{check_support_channel, check_support_channel_with_timeout};
pub use tls::{probe_tls_endpoint, probe_tls_endpoint_with_timeout, TlsResponder};
