use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::error::{Error, Result};
use crate::qc::Mode;
use crate::repo::Flavor;

pub const DEFAULT_CHECK_TIMEOUT: Duration = Duration::from_secs(600);

/// Runtime parameters of one validation run.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub release: String,
    pub os: String,
    /// Verification repositories holding the candidate packages.
    pub repositories: Vec<String>,
    /// Distribution repositories that complete the dependency closure.
    pub base_repositories: Vec<String>,
    /// Repositories with the currently released version, for upgrade checks.
    pub production_repositories: Vec<String>,
    pub flavor: Flavor,
    pub workdir: PathBuf,
    pub mode: Mode,
    pub timeout_per_check: Duration,
    /// Extra bindings exported to hooks and tests.
    pub environment: BTreeMap<String, String>,
    pub tests_file: Option<PathBuf>,
    /// Host name the service certificate is issued for.
    pub hostname: String,
}

impl RunContext {
    pub fn new(release: impl Into<String>, os: impl Into<String>, workdir: impl Into<PathBuf>) -> Self {
        let os = os.into();
        RunContext {
            release: release.into(),
            flavor: Flavor::for_os(&os),
            os,
            repositories: Vec::new(),
            base_repositories: Vec::new(),
            production_repositories: Vec::new(),
            workdir: workdir.into(),
            mode: Mode::Live,
            timeout_per_check: DEFAULT_CHECK_TIMEOUT,
            environment: BTreeMap::new(),
            tests_file: None,
            hostname: "localhost".to_string(),
        }
    }

    pub fn mock(mut self) -> Self {
        self.mode = Mode::Mock;
        self
    }

    /// Fails unless the workdir exists and accepts new files.
    pub fn check_workdir(&self) -> Result<()> {
        let not_writable = || Error::WorkdirNotWritable(self.workdir.clone());
        if !self.workdir.is_dir() {
            return Err(not_writable());
        }
        let probe = self.workdir.join(".qcgate-write-probe");
        fs::write(&probe, b"").map_err(|_| not_writable())?;
        let _ = fs::remove_file(probe);
        Ok(())
    }

    /// Variables exported to every external script.
    pub fn exported_env(&self) -> Vec<(String, String)> {
        let mut env = vec![
            ("UMD_RELEASE".to_string(), self.release.clone()),
            ("UMD_OS".to_string(), self.os.clone()),
            ("UMD_REPOSITORIES".to_string(), self.repositories.join(",")),
            ("UMD_WORKDIR".to_string(), self.workdir.display().to_string()),
        ];
        env.extend(self.environment.iter().map(|(k, v)| (k.clone(), v.clone())));
        env
    }

    /// `path` relative to the workdir when it lies inside it.
    pub fn relative(&self, path: &Path) -> PathBuf {
        path.strip_prefix(&self.workdir)
            .map(Path::to_path_buf)
            .unwrap_or_else(|_| path.to_path_buf())
    }

    pub fn subdir(&self, name: &str) -> Result<PathBuf> {
        let dir = self.workdir.join(name);
        fs::create_dir_all(&dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        Ok(dir)
    }
}
