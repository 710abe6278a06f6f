use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::exec::ExecError;
use crate::repo::RepoError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("unknown backend type '{0}'")]
    UnknownBackend(String),

    #[error("duplicate extra_vars key '{0}'")]
    DuplicateExtraVar(String),

    #[error("unknown check id '{0}'")]
    UnknownCheck(String),

    #[error("invalid product definition: {0}")]
    InvalidProduct(String),

    #[error("backend unavailable: {0}")]
    BackendUnavailable(String),

    #[error("workdir {} is not writable", .0.display())]
    WorkdirNotWritable(PathBuf),

    #[error("test-definition missing: {0}")]
    TestDefinitionMissing(String),

    #[error("unknown test suite '{id}'; available: {}", .available.join(", "))]
    UnknownSuite { id: String, available: Vec<String> },

    #[error("malformed manifest {}: line {line}: {message}", .path.display())]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("manifest declares no packages")]
    EmptyManifest,

    #[error("invalid hostname '{0}'")]
    InvalidHostname(String),

    #[error("certificate error: {0}")]
    Crypto(#[from] openssl::error::ErrorStack),

    #[error("information endpoint unavailable: {0}")]
    InfoUnavailable(String),

    #[error("unknown product '{name}'; available: {}", available.join(", "))]
    UnknownProduct { name: String, available: Vec<String> },

    #[error("invalid report document: {0}")]
    InvalidReport(String),

    #[error("no published information")]
    NoPublishedInformation,

    #[error("LDIF line {line}: {message}")]
    Ldif { line: usize, message: String },

    #[error(transparent)]
    Repo(#[from] RepoError),

    #[error(transparent)]
    Exec(#[from] ExecError),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
}

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
