//! Resident-set polling of an isolated child process.
//!
//! The child's RSS is read from `/proc/<pid>/status` once right after spawn
//! and then on a fixed wall-clock schedule at `poll_hz` until it exits. The
//! reported figure is the mean of the samples. Measurements are serialized
//! machine-wide through an advisory lock file.

use std::fs::{File, OpenOptions};
use std::io::Read;
use std::os::unix::io::AsRawFd;
use std::os::unix::process::ExitStatusExt;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitStatus, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::{MetricsError, BYTES_PER_KB};

pub const DEFAULT_POLL_HZ: f64 = 2.0;

/// Interval between exit checks while waiting for the next sample.
const EXIT_CHECK: Duration = Duration::from_millis(5);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryResult {
    /// Mean resident set over all samples, kilobytes.
    pub avg_kb: f64,
    /// Largest resident set seen by polling or reported by the kernel.
    pub peak_kb: f64,
    pub sample_count: usize,
    /// Individual samples in kilobytes, in polling order.
    pub samples_kb: Vec<f64>,
}

/// Process to measure and the file fed to its standard input.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MemoryCommand {
    pub command: Vec<String>,
    pub env: Vec<(String, String)>,
    pub workdir: Option<PathBuf>,
    pub stdin: Option<PathBuf>,
}

impl MemoryCommand {
    pub fn new<S: Into<String>>(command: impl IntoIterator<Item = S>) -> Self {
        MemoryCommand {
            command: command.into_iter().map(Into::into).collect(),
            ..Self::default()
        }
    }

    pub fn with_stdin(mut self, path: impl Into<PathBuf>) -> Self {
        self.stdin = Some(path.into());
        self
    }
}

/// Machine-wide exclusive lock held for the duration of one measurement.
pub struct MemoryLock {
    file: File,
}

impl MemoryLock {
    pub fn default_path() -> PathBuf {
        std::env::temp_dir().join("tagmark-memory.lock")
    }

    pub fn acquire(path: &Path) -> Result<Self, MetricsError> {
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(path)
            .map_err(|e| MetricsError::Memory(format!("lock {}: {e}", path.display())))?;
        // SAFETY: flock on a descriptor we own
        let rc = unsafe { libc::flock(file.as_raw_fd(), libc::LOCK_EX) };
        if rc != 0 {
            return Err(MetricsError::Memory(format!(
                "lock {}: {}",
                path.display(),
                std::io::Error::last_os_error()
            )));
        }
        Ok(MemoryLock { file })
    }
}

impl Drop for MemoryLock {
    fn drop(&mut self) {
        // SAFETY: as above
        unsafe { libc::flock(self.file.as_raw_fd(), libc::LOCK_UN) };
    }
}

/// Current resident set of `pid` in kilobytes, if the process is readable.
pub fn read_rss_kb(pid: u32) -> Option<f64> {
    let mut text = String::new();
    File::open(format!("/proc/{pid}/status"))
        .ok()?
        .read_to_string(&mut text)
        .ok()?;
    let line = text.lines().find(|l| l.starts_with("VmRSS:"))?;
    let kib: f64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kib * 1024.0 / BYTES_PER_KB)
}

struct Exit {
    status: ExitStatus,
    maxrss_kb: f64,
}

/// Reaps `pid` if it has exited.
fn try_reap(pid: u32) -> Result<Option<Exit>, MetricsError> {
    let mut status = 0;
    // SAFETY: zeroed rusage is a valid out-parameter
    let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
    // SAFETY: pid is our unreaped child
    let rc = unsafe { libc::wait4(pid as libc::pid_t, &mut status, libc::WNOHANG, &mut usage) };
    match rc {
        0 => Ok(None),
        r if r < 0 => Err(MetricsError::Memory(format!(
            "wait4: {}",
            std::io::Error::last_os_error()
        ))),
        _ => Ok(Some(Exit {
            status: ExitStatus::from_raw(status),
            // ru_maxrss is in KiB on Linux
            maxrss_kb: usage.ru_maxrss as f64 * 1024.0 / BYTES_PER_KB,
        })),
    }
}

/// Runs `command` to completion and polls its resident set at `poll_hz`.
pub fn measure_memory(command: &MemoryCommand, poll_hz: f64) -> Result<MemoryResult, MetricsError> {
    if !(poll_hz > 0.0 && poll_hz.is_finite()) {
        return Err(MetricsError::Memory(format!(
            "poll rate must be positive, got {poll_hz}"
        )));
    }
    let (program, args) = command
        .command
        .split_first()
        .ok_or_else(|| MetricsError::Memory("empty command".into()))?;
    let mut cmd = Command::new(program);
    cmd.args(args).envs(command.env.iter().map(|(k, v)| (k, v)));
    if let Some(dir) = &command.workdir {
        cmd.current_dir(dir);
    }
    let stdin = match &command.stdin {
        Some(path) => Stdio::from(
            File::open(path)
                .map_err(|e| MetricsError::Memory(format!("{}: {e}", path.display())))?,
        ),
        None => Stdio::null(),
    };
    let stderr_file = tempfile::tempfile().map_err(|e| MetricsError::Memory(e.to_string()))?;
    let stderr_copy = stderr_file
        .try_clone()
        .map_err(|e| MetricsError::Memory(e.to_string()))?;
    let child = cmd
        .stdin(stdin)
        .stdout(Stdio::null())
        .stderr(Stdio::from(stderr_copy))
        .spawn()
        .map_err(|e| MetricsError::Memory(format!("cannot start {program}: {e}")))?;
    let pid = child.id();
    let start = Instant::now();
    let period = Duration::from_secs_f64(1.0 / poll_hz);

    let mut samples = Vec::new();
    // the forced sample waits one exit-check tick so the loader has mapped
    // the program; a process gone by then falls back to its ru_maxrss
    thread::sleep(EXIT_CHECK);
    let mut forced = false;
    let mut next = 1u32;
    let exit = loop {
        if let Some(exit) = try_reap(pid)? {
            break exit;
        }
        if !forced {
            forced = true;
            samples.extend(read_rss_kb(pid));
            continue;
        }
        let due = start + period * next;
        let now = Instant::now();
        if now >= due {
            samples.extend(read_rss_kb(pid));
            next += 1;
            // skip slots missed by more than one period
            while start + period * next <= now {
                next += 1;
            }
        } else {
            thread::sleep(EXIT_CHECK.min(due - now));
        }
    };
    drop(child);

    if !exit.status.success() {
        let mut stderr = String::new();
        let mut file = stderr_file;
        use std::io::Seek;
        let _ = file.rewind();
        let _ = file.read_to_string(&mut stderr);
        return Err(MetricsError::ProcessFailed {
            status: exit.status,
            stderr: stderr.trim_end().to_string(),
        });
    }
    if samples.is_empty() {
        // exited before the first read could see it
        samples.push(exit.maxrss_kb);
    }
    let avg_kb = samples.iter().sum::<f64>() / samples.len() as f64;
    let peak_kb = samples.iter().copied().fold(exit.maxrss_kb, f64::max);
    Ok(MemoryResult {
        avg_kb,
        peak_kb,
        sample_count: samples.len(),
        samples_kb: samples,
    })
}
