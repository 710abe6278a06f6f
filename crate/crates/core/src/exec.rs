//! External process execution with a wall-clock limit and output capture.
//!
//! Every script the engine runs (hooks, functional tests, pluggable checks,
//! validators, deployment tools) goes through [`run`]. Output of both streams
//! is written to a log file, the child is placed in its own process group so
//! that a timeout kills the whole tree, and the outcome records how the
//! process ended.

use std::fs::{self, File};
use std::io;
use std::os::unix::process::CommandExt;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use thiserror::Error;
use wait_timeout::ChildExt;

#[derive(Debug, Error)]
pub enum ExecError {
    #[error("{} not found", .0.display())]
    NotFound(PathBuf),

    #[error("{} is not executable", .0.display())]
    NotExecutable(PathBuf),

    #[error("cannot run {}: {source}", .program.display())]
    Spawn {
        program: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("cannot write log {}: {source}", .path.display())]
    Log {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Exited(i32),
    Signaled(i32),
    TimedOut,
}

#[derive(Debug, Clone)]
pub struct ExecRequest {
    pub program: PathBuf,
    pub args: Vec<String>,
    pub cwd: Option<PathBuf>,
    pub env: Vec<(String, String)>,
    pub timeout: Duration,
    pub log_path: PathBuf,
    /// Separate destination for stdout; stderr alone then goes to the log.
    pub stdout_path: Option<PathBuf>,
    /// Written to the top of the log before the child starts.
    pub preamble: Option<String>,
}

impl ExecRequest {
    pub fn new(program: impl Into<PathBuf>, log_path: impl Into<PathBuf>) -> Self {
        ExecRequest {
            program: program.into(),
            args: Vec::new(),
            cwd: None,
            env: Vec::new(),
            timeout: Duration::from_secs(600),
            log_path: log_path.into(),
            stdout_path: None,
            preamble: None,
        }
    }

    pub fn stdout_to(mut self, path: impl Into<PathBuf>) -> Self {
        self.stdout_path = Some(path.into());
        self
    }

    pub fn preamble(mut self, text: impl Into<String>) -> Self {
        self.preamble = Some(text.into());
        self
    }

    /// Program and arguments as one shell-like line, for logs.
    pub fn command_line(&self) -> String {
        std::iter::once(self.program.display().to_string())
            .chain(self.args.iter().cloned())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn args<I, S>(mut self, args: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.args.extend(args.into_iter().map(Into::into));
        self
    }

    pub fn cwd(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cwd = Some(dir.into());
        self
    }

    pub fn env(mut self, vars: impl IntoIterator<Item = (String, String)>) -> Self {
        self.env.extend(vars);
        self
    }

    pub fn timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

#[derive(Debug, Clone)]
pub struct ExecOutcome {
    pub termination: Termination,
    /// Interleaved stdout and stderr.
    pub output: String,
    pub duration: Duration,
    pub log_path: PathBuf,
}

impl ExecOutcome {
    pub fn success(&self) -> bool {
        self.termination == Termination::Exited(0)
    }

    pub fn exit_code(&self) -> Option<i32> {
        match self.termination {
            Termination::Exited(code) => Some(code),
            _ => None,
        }
    }

    pub fn describe(&self) -> String {
        match self.termination {
            Termination::Exited(code) => format!("exit status {code}"),
            Termination::Signaled(sig) => format!("killed by signal {sig}"),
            Termination::TimedOut => format!("timeout after {:.0}s", self.duration.as_secs_f64()),
        }
    }

    /// The last `lines` lines of captured output.
    pub fn excerpt(&self, lines: usize) -> String {
        excerpt(&self.output, lines)
    }
}

pub fn excerpt(text: &str, lines: usize) -> String {
    let all: Vec<&str> = text.lines().collect();
    let start = all.len().saturating_sub(lines);
    all[start..].join("\n")
}

fn kill_group(pid: u32) {
    // SAFETY: signalling a process group we created; a stale id only yields ESRCH.
    unsafe {
        libc::kill(-(pid as libc::pid_t), libc::SIGKILL);
    }
}

/// Runs `req` to completion or until its timeout expires.
pub fn run(req: &ExecRequest) -> Result<ExecOutcome, ExecError> {
    let program = match &req.cwd {
        Some(dir) if req.program.is_relative() && req.program.components().count() > 1 => dir.join(&req.program),
        _ => req.program.clone(),
    };
    if program.components().count() > 1 && !program.exists() {
        return Err(ExecError::NotFound(program));
    }
    if let Some(parent) = req.log_path.parent() {
        fs::create_dir_all(parent).map_err(|source| ExecError::Log {
            path: req.log_path.clone(),
            source,
        })?;
    }
    let log_failure = |source| ExecError::Log {
        path: req.log_path.clone(),
        source,
    };
    let mut log = File::create(&req.log_path).map_err(log_failure)?;
    if let Some(text) = &req.preamble {
        use std::io::Write;
        log.write_all(text.as_bytes()).map_err(log_failure)?;
        if !text.ends_with('\n') {
            log.write_all(b"\n").map_err(log_failure)?;
        }
    }
    let log_err = log.try_clone().map_err(log_failure)?;
    let stdout = match &req.stdout_path {
        Some(path) => File::create(path).map_err(|source| ExecError::Log {
            path: path.clone(),
            source,
        })?,
        None => log,
    };

    let mut cmd = Command::new(&program);
    cmd.args(&req.args)
        .stdin(Stdio::null())
        .stdout(Stdio::from(stdout))
        .stderr(Stdio::from(log_err))
        .envs(req.env.iter().map(|(k, v)| (k.as_str(), v.as_str())))
        .process_group(0);
    if let Some(dir) = &req.cwd {
        cmd.current_dir(dir);
    }

    let started = Instant::now();
    // A script written by another thread may still be open for writing in a
    // concurrently forked child; ETXTBSY clears once that child execs.
    let mut spawned = cmd.spawn();
    for _ in 0..50 {
        match &spawned {
            Err(e) if e.raw_os_error() == Some(libc::ETXTBSY) => {
                std::thread::sleep(Duration::from_millis(20));
                spawned = cmd.spawn();
            }
            _ => break,
        }
    }
    let mut child = spawned.map_err(|source| match source.kind() {
        io::ErrorKind::NotFound => ExecError::NotFound(program.clone()),
        io::ErrorKind::PermissionDenied => ExecError::NotExecutable(program.clone()),
        _ => ExecError::Spawn {
            program: program.clone(),
            source,
        },
    })?;

    let waited = child.wait_timeout(req.timeout).map_err(|source| ExecError::Spawn {
        program: program.clone(),
        source,
    })?;
    let termination = match waited {
        Some(status) => status_to_termination(status),
        None => {
            kill_group(child.id());
            let _ = child.wait();
            Termination::TimedOut
        }
    };
    let duration = started.elapsed();
    let output = fs::read(&req.log_path)
        .map(|b| String::from_utf8_lossy(&b).into_owned())
        .unwrap_or_default();
    Ok(ExecOutcome {
        termination,
        output,
        duration,
        log_path: req.log_path.clone(),
    })
}

fn status_to_termination(status: std::process::ExitStatus) -> Termination {
    use std::os::unix::process::ExitStatusExt;
    match (status.code(), status.signal()) {
        (Some(code), _) => Termination::Exited(code),
        (None, Some(sig)) => Termination::Signaled(sig),
        (None, None) => Termination::Exited(-1),
    }
}

/// Searches `PATH` for an executable named `name`.
pub fn find_in_path(name: &str) -> Option<PathBuf> {
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path)
        .map(|dir| dir.join(name))
        .find(|candidate| is_executable(candidate))
}

pub fn is_executable(path: &Path) -> bool {
    use std::os::unix::fs::PermissionsExt;
    fs::metadata(path)
        .map(|m| m.is_file() && m.permissions().mode() & 0o111 != 0)
        .unwrap_or(false)
}

/// Writes an executable shell script. Test fixtures and generated wrappers use it.
pub fn write_script(path: &Path, body: &str) -> io::Result<()> {
    use std::os::unix::fs::PermissionsExt;
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, body)?;
    fs::set_permissions(path, fs::Permissions::from_mode(0o755))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn captures_exit_code_and_output() {
        let dir = tempfile::tempdir().unwrap();
        let script = dir.path().join("s.sh");
        write_script(&script, "#!/bin/sh\necho out\necho err >&2\nexit 7\n").unwrap();
        let out = run(&ExecRequest::new(&script, dir.path().join("s.log"))).unwrap();
        assert_eq!(out.termination, Termination::Exited(7));
        assert!(out.output.contains("out") && out.output.contains("err"));
        assert_eq!(out.describe(), "exit status 7");
    }

    #[test]
    fn timeout_kills_process_group() {
        let dir = tempfile::tempdir().unwrap();
        let script = dir.path().join("sleep.sh");
        write_script(&script, "#!/bin/sh\nsleep 30\n").unwrap();
        let req = ExecRequest::new(&script, dir.path().join("sleep.log")).timeout(Duration::from_millis(300));
        let out = run(&req).unwrap();
        assert_eq!(out.termination, Termination::TimedOut);
        assert!(out.duration < Duration::from_secs(5));
    }

    #[test]
    fn missing_program() {
        let dir = tempfile::tempdir().unwrap();
        let err = run(&ExecRequest::new(dir.path().join("nope.sh"), dir.path().join("x.log"))).unwrap_err();
        assert!(matches!(err, ExecError::NotFound(_)));
        let err = run(&ExecRequest::new("definitely-not-a-command-xyz", dir.path().join("y.log"))).unwrap_err();
        assert!(matches!(err, ExecError::NotFound(_)));
    }

    #[test]
    fn separate_stdout_and_preamble() {
        let dir = tempfile::tempdir().unwrap();
        let script = dir.path().join("p.sh");
        write_script(&script, "#!/bin/sh\necho data\necho noise >&2\n").unwrap();
        let req = ExecRequest::new(&script, dir.path().join("p.log"))
            .stdout_to(dir.path().join("p.out"))
            .preamble("$ p.sh");
        let out = run(&req).unwrap();
        assert_eq!(fs::read_to_string(dir.path().join("p.out")).unwrap(), "data\n");
        assert_eq!(out.output, "$ p.sh\nnoise\n");
    }

    #[test]
    fn environment_and_cwd() {
        let dir = tempfile::tempdir().unwrap();
        write_script(&dir.path().join("bin/e.sh"), "#!/bin/sh\necho \"$FOO $(pwd)\"\n").unwrap();
        let req = ExecRequest::new("bin/e.sh", dir.path().join("e.log"))
            .cwd(dir.path())
            .env([("FOO".to_string(), "bar".to_string())]);
        let out = run(&req).unwrap();
        assert!(out.success());
        assert!(out.output.starts_with("bar "), "{}", out.output);
    }
}
