//! Repository metadata, version grammars and dependency closure for
//! release-candidate validation.

mod closure;
pub mod deb;
mod evr;
mod fetch;
mod package;
mod rc;
pub mod rpmmd;
mod vercmp;

use thiserror::Error;

pub use closure::{arch_compatible, compute_closure, is_arch_independent, satisfies};
pub use evr::{Evr, Flavor, Relation, VersionConstraint};
pub use fetch::{fetch_repo_metadata, fetch_repo_metadata_with, FetchOptions};
pub use package::{Dependency, Package, PackageId, RepoIndex, UnmetDependency};
pub use rc::{rc_check, rc_check_with, RcSummary};
pub use vercmp::{compare_versions_deb, compare_versions_rpm, rpmvercmp, verrevcmp};

pub(crate) use rc::fetch_all;

#[derive(Debug, Error)]
pub enum RepoError {
    #[error("not a repository: {0}")]
    NotARepository(String),

    #[error("checksum mismatch: expected {expected}, got {actual}")]
    ChecksumMismatch { expected: String, actual: String },

    #[error("parse error at offset {offset}: {message}")]
    Parse { offset: u64, message: String },

    #[error("fetch {url}: {message}")]
    Fetch { url: String, message: String },

    #[error("flavor mismatch: {url} is {found}, expected {expected}")]
    FlavorMismatch {
        expected: Flavor,
        found: Flavor,
        url: String,
    },
}
