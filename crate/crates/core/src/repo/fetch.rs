//! Repository metadata retrieval over HTTP(S) or the local filesystem.

use std::path::PathBuf;
use std::time::Duration;

use url::Url;

use super::evr::Flavor;
use super::package::RepoIndex;
use super::{deb, rpmmd, RepoError};

#[derive(Debug, Clone)]
pub struct FetchOptions {
    pub timeout: Duration,
    pub max_redirects: usize,
}

impl Default for FetchOptions {
    fn default() -> Self {
        FetchOptions {
            timeout: Duration::from_secs(30),
            max_redirects: 5,
        }
    }
}

enum Location {
    Http(Url),
    Local(PathBuf),
}

impl Location {
    fn parse(source: &str) -> Result<Location, RepoError> {
        if source.starts_with("http://") || source.starts_with("https://") {
            let mut url = Url::parse(source).map_err(|e| RepoError::Fetch {
                url: source.to_string(),
                message: e.to_string(),
            })?;
            if !url.path().ends_with('/') {
                let path = format!("{}/", url.path());
                url.set_path(&path);
            }
            Ok(Location::Http(url))
        } else if source.starts_with("file://") {
            let url = Url::parse(source).map_err(|e| RepoError::Fetch {
                url: source.to_string(),
                message: e.to_string(),
            })?;
            let path = url.to_file_path().map_err(|_| RepoError::Fetch {
                url: source.to_string(),
                message: "not a local file URL".into(),
            })?;
            Ok(Location::Local(path))
        } else {
            Ok(Location::Local(PathBuf::from(source)))
        }
    }
}

struct Fetcher {
    source: String,
    location: Location,
    client: Option<reqwest::blocking::Client>,
}

impl Fetcher {
    fn new(source: &str, options: &FetchOptions) -> Result<Fetcher, RepoError> {
        let location = Location::parse(source)?;
        let client = match location {
            Location::Http(_) => Some(
                reqwest::blocking::Client::builder()
                    .timeout(options.timeout)
                    .redirect(reqwest::redirect::Policy::limited(options.max_redirects))
                    .build()
                    .map_err(|e| RepoError::Fetch {
                        url: source.to_string(),
                        message: e.to_string(),
                    })?,
            ),
            Location::Local(_) => None,
        };
        Ok(Fetcher {
            source: source.to_string(),
            location,
            client,
        })
    }

    /// Returns `None` when the resource does not exist.
    fn get(&self, relative: &str) -> Result<Option<Vec<u8>>, RepoError> {
        match &self.location {
            Location::Local(root) => {
                let path = root.join(relative);
                match std::fs::read(&path) {
                    Ok(bytes) => Ok(Some(bytes)),
                    Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                        if root.exists() {
                            Ok(None)
                        } else {
                            Err(RepoError::Fetch {
                                url: self.source.clone(),
                                message: format!("{} does not exist", root.display()),
                            })
                        }
                    }
                    Err(e) => Err(RepoError::Fetch {
                        url: path.display().to_string(),
                        message: e.to_string(),
                    }),
                }
            }
            Location::Http(base) => {
                let url = base.join(relative).map_err(|e| RepoError::Fetch {
                    url: self.source.clone(),
                    message: e.to_string(),
                })?;
                let client = self.client.as_ref().expect("http fetcher has a client");
                let fetch_err = |e: reqwest::Error| RepoError::Fetch {
                    url: url.to_string(),
                    message: e.to_string(),
                };
                let response = client.get(url.clone()).send().map_err(fetch_err)?;
                let status = response.status();
                if status == reqwest::StatusCode::NOT_FOUND {
                    return Ok(None);
                }
                if !status.is_success() {
                    return Err(RepoError::Fetch {
                        url: url.to_string(),
                        message: format!("status {}", status.as_u16()),
                    });
                }
                Ok(Some(response.bytes().map_err(fetch_err)?.to_vec()))
            }
        }
    }
}

pub fn fetch_repo_metadata(source: &str, flavor: Flavor) -> Result<RepoIndex, RepoError> {
    fetch_repo_metadata_with(source, flavor, &FetchOptions::default())
}

/// Reads and parses the package index at `source`.
///
/// RPM sources are the directory holding `repodata/`. DEB sources are the
/// directory holding `Packages` or `Packages.gz` (for example
/// `.../dists/xenial/main/binary-amd64`), or the index file itself.
pub fn fetch_repo_metadata_with(
    source: &str,
    flavor: Flavor,
    options: &FetchOptions,
) -> Result<RepoIndex, RepoError> {
    let packages = match flavor {
        Flavor::Rpm => {
            let fetcher = Fetcher::new(source, options)?;
            let repomd = fetcher
                .get("repodata/repomd.xml")?
                .ok_or_else(|| RepoError::NotARepository(source.to_string()))?;
            let primary = rpmmd::parse_repomd(&repomd)?;
            let data = fetcher
                .get(&primary.href)?
                .ok_or_else(|| RepoError::NotARepository(source.to_string()))?;
            rpmmd::verify_checksum(&primary.checksum_type, &primary.checksum, &data)?;
            rpmmd::parse_primary(&rpmmd::decompress(data)?)?
        }
        Flavor::Deb => {
            let trimmed = source.trim_end_matches('/');
            let (dir, candidates): (&str, Vec<&str>) = match trimmed.rsplit_once('/') {
                Some((dir, file @ ("Packages" | "Packages.gz"))) => (dir, vec![file]),
                _ => (trimmed, vec!["Packages.gz", "Packages"]),
            };
            let dir = if dir.is_empty() { "/" } else { dir };
            let fetcher = Fetcher::new(dir, options)?;
            let mut found = None;
            for name in candidates {
                if let Some(bytes) = fetcher.get(name)? {
                    found = Some(bytes);
                    break;
                }
            }
            let bytes = found.ok_or_else(|| RepoError::NotARepository(source.to_string()))?;
            let text = rpmmd::decompress(bytes)?;
            let text = String::from_utf8(text).map_err(|e| RepoError::Parse {
                offset: e.utf8_error().valid_up_to() as u64,
                message: "Packages index is not valid UTF-8".into(),
            })?;
            deb::parse_packages(&text)?
        }
    };
    Ok(RepoIndex::new(flavor, source, packages))
}
