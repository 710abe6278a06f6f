//! TLS acceptance probe (QC_SEC_1, QC_SEC_2) and a loopback responder used
//! for desk-scale runs.

use std::io::Write;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::path::Path;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::{Duration, Instant};

use openssl::pkey::PKey;
use openssl::ssl::{SslAcceptor, SslConnector, SslMethod, SslVerifyMode};
use openssl::x509::X509;

use super::ca::{digest_family, load_pem_cert, signature_algorithm_name, verify_chain, DigestFamily};
use crate::error::{Error, Result};
use crate::qc::{ids, CheckResult};

pub const DEFAULT_PROBE_TIMEOUT: Duration = Duration::from_secs(10);

pub fn probe_tls_endpoint(host: &str, port: u16, ca: &X509) -> [CheckResult; 2] {
    probe_tls_endpoint_with_timeout(host, port, ca, DEFAULT_PROBE_TIMEOUT)
}

fn connect(host: &str, port: u16, timeout: Duration) -> std::result::Result<TcpStream, String> {
    let addrs: Vec<SocketAddr> = (host, port)
        .to_socket_addrs()
        .map_err(|e| format!("cannot resolve {host}: {e}"))?
        .collect();
    let mut last = format!("no address for {host}");
    for addr in addrs {
        match TcpStream::connect_timeout(&addr, timeout) {
            Ok(stream) => return Ok(stream),
            Err(e) if e.kind() == std::io::ErrorKind::ConnectionRefused => {
                last = format!("connection refused ({addr})");
            }
            Err(e) => last = format!("{addr}: {e}"),
        }
    }
    Err(last)
}

/// Handshakes with `host:port` without verification, then judges the
/// presented chain separately so a weak certificate is reported rather than
/// hidden behind a handshake error.
pub fn probe_tls_endpoint_with_timeout(host: &str, port: u16, ca: &X509, timeout: Duration) -> [CheckResult; 2] {
    let started = Instant::now();
    let both_fail = |detail: String| {
        let secs = started.elapsed().as_secs_f64();
        [
            CheckResult::fail(ids::QC_SEC_1, detail.clone()).with_duration(secs),
            CheckResult::fail(ids::QC_SEC_2, format!("not assessed: {detail}")).with_duration(secs),
        ]
    };

    let stream = match connect(host, port, timeout) {
        Ok(s) => s,
        Err(e) => return both_fail(e),
    };
    let _ = stream.set_read_timeout(Some(timeout));
    let _ = stream.set_write_timeout(Some(timeout));

    let connector = SslConnector::builder(SslMethod::tls_client()).map(|mut b| {
        b.set_verify(SslVerifyMode::NONE);
        b.set_security_level(0);
        b.build()
    });
    let connector = match connector {
        Ok(c) => c,
        Err(e) => return both_fail(format!("TLS setup: {e}")),
    };
    let config = match connector.configure() {
        Ok(c) => c.verify_hostname(false),
        Err(e) => return both_fail(format!("TLS setup: {e}")),
    };
    let ssl = match config.connect(host, stream) {
        Ok(s) => s,
        Err(e) => return both_fail(format!("handshake with {host}:{port} failed: {e}")),
    };

    let Some(leaf) = ssl.ssl().peer_certificate() else {
        return both_fail(format!("{host}:{port} presented no certificate"));
    };
    let presented: Vec<X509> = ssl
        .ssl()
        .peer_cert_chain()
        .map(|chain| chain.iter().map(|c| c.to_owned()).collect())
        .unwrap_or_default();
    let intermediates: Vec<X509> = presented.into_iter().skip(1).collect();
    let secs = started.elapsed().as_secs_f64();
    let mut results = judge_chain(&leaf, &intermediates, ca);
    results.iter_mut().for_each(|r| r.duration = secs);
    results
}

/// QC_SEC_1 requires a chain to `ca` and a SHA-2 leaf; QC_SEC_2 requires
/// SHA-2 on every presented certificate.
pub fn judge_chain(leaf: &X509, intermediates: &[X509], ca: &X509) -> [CheckResult; 2] {
    let leaf_alg = signature_algorithm_name(leaf);
    let sec1 = match (verify_chain(leaf, intermediates, ca), digest_family(leaf)) {
        (Ok(()), DigestFamily::Sha2) => CheckResult::ok(ids::QC_SEC_1, format!("chain validates ({leaf_alg})")),
        (Err(e), _) => CheckResult::fail(ids::QC_SEC_1, format!("certificate does not chain to the test CA: {e}")),
        (Ok(()), _) => CheckResult::fail(ids::QC_SEC_1, format!("leaf signed with {leaf_alg}, SHA-2 required")),
    };
    let weak: Vec<String> = std::iter::once(leaf)
        .chain(intermediates)
        .filter_map(|c| match digest_family(c) {
            DigestFamily::Sha2 => None,
            DigestFamily::Weak(name) | DigestFamily::Unknown(name) => Some(name),
        })
        .collect();
    let sec2 = if weak.is_empty() {
        CheckResult::ok(ids::QC_SEC_2, format!("SHA-2 signatures ({leaf_alg})"))
    } else {
        CheckResult::fail(ids::QC_SEC_2, format!("non SHA-2 signature: {}", weak.join(", ")))
    };
    [sec1, sec2]
}

/// Offline variant for products that expose no TLS endpoint: judges the
/// issued files themselves.
pub fn check_certificate_files(leaf_path: &Path, ca: &X509) -> [CheckResult; 2] {
    match load_pem_cert(leaf_path) {
        Ok(leaf) => judge_chain(&leaf, &[], ca),
        Err(e) => [
            CheckResult::fail(ids::QC_SEC_1, e.to_string()),
            CheckResult::fail(ids::QC_SEC_2, e.to_string()),
        ],
    }
}

/// Loopback TLS server presenting a fixed certificate. Each connection gets
/// a handshake and a one-line greeting.
pub struct TlsResponder {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl TlsResponder {
    pub fn start(cert_path: &Path, key_path: &Path) -> Result<Self> {
        let cert = load_pem_cert(cert_path)?;
        let key_pem = std::fs::read(key_path).map_err(|e| Error::io(format!("reading {}", key_path.display()), e))?;
        let key = PKey::private_key_from_pem(&key_pem)?;

        let mut builder = SslAcceptor::mozilla_intermediate_v5(SslMethod::tls_server())?;
        // legacy digests must still load so the probe can report them
        builder.set_security_level(0);
        builder.set_certificate(&cert)?;
        builder.set_private_key(&key)?;
        builder.check_private_key()?;
        let acceptor = builder.build();

        let listener =
            TcpListener::bind("127.0.0.1:0").map_err(|e| Error::io("binding TLS responder", e))?;
        let addr = listener.local_addr().map_err(|e| Error::io("TLS responder address", e))?;
        let stop = Arc::new(AtomicBool::new(false));
        let flag = Arc::clone(&stop);
        let handle = std::thread::spawn(move || {
            for stream in listener.incoming() {
                if flag.load(Ordering::SeqCst) {
                    break;
                }
                let Ok(stream) = stream else { continue };
                let _ = stream.set_read_timeout(Some(Duration::from_secs(5)));
                if let Ok(mut tls) = acceptor.accept(stream) {
                    let _ = tls.write_all(b"qcgate responder\n");
                    let _ = tls.shutdown();
                }
            }
        });
        Ok(TlsResponder {
            addr,
            stop,
            handle: Some(handle),
        })
    }

    pub fn port(&self) -> u16 {
        self.addr.port()
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }
}

impl Drop for TlsResponder {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qc::CheckStatus;
    use crate::security::ca::{create_ca, issue_host_cert};

    #[test]
    fn issued_certificate_passes_probe() {
        let dir = tempfile::tempdir().unwrap();
        let ca = create_ca(dir.path()).unwrap();
        let issued = issue_host_cert(&ca, "localhost").unwrap();
        let responder = TlsResponder::start(&issued.cert_path, &issued.key_path).unwrap();
        let [sec1, sec2] = probe_tls_endpoint("127.0.0.1", responder.port(), ca.certificate());
        assert_eq!(sec1.status, CheckStatus::Ok, "{}", sec1.detail);
        assert_eq!(sec2.status, CheckStatus::Ok, "{}", sec2.detail);
    }

    #[test]
    fn foreign_ca_fails_sec1_only() {
        let dir = tempfile::tempdir().unwrap();
        let ca = create_ca(&dir.path().join("a")).unwrap();
        let other = create_ca(&dir.path().join("b")).unwrap();
        let issued = issue_host_cert(&ca, "localhost").unwrap();
        let responder = TlsResponder::start(&issued.cert_path, &issued.key_path).unwrap();
        let [sec1, sec2] = probe_tls_endpoint("127.0.0.1", responder.port(), other.certificate());
        assert_eq!(sec1.status, CheckStatus::Fail);
        assert_eq!(sec2.status, CheckStatus::Ok);
    }

    #[test]
    fn closed_port_is_connection_refused() {
        let port = {
            let l = TcpListener::bind("127.0.0.1:0").unwrap();
            l.local_addr().unwrap().port()
        };
        let dir = tempfile::tempdir().unwrap();
        let ca = create_ca(dir.path()).unwrap();
        let [sec1, _] = probe_tls_endpoint("127.0.0.1", port, ca.certificate());
        assert_eq!(sec1.status, CheckStatus::Fail);
        assert!(sec1.detail.contains("connection refused"), "{}", sec1.detail);
    }

    #[test]
    fn offline_file_check() {
        let dir = tempfile::tempdir().unwrap();
        let ca = create_ca(dir.path()).unwrap();
        let issued = issue_host_cert(&ca, "localhost").unwrap();
        let [sec1, sec2] = check_certificate_files(&issued.cert_path, ca.certificate());
        assert_eq!((sec1.status, sec2.status), (CheckStatus::Ok, CheckStatus::Ok));
    }
}
