//! Running the external MONA binary.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use super::WsksError;

/// Where the solver lives and how long it may run.
#[derive(Clone, Debug)]
pub struct SolverConfig {
    /// Explicit binary; otherwise `MONA_BIN`, then `mona` on `PATH`.
    pub binary: Option<PathBuf>,
    pub timeout: Duration,
}

impl Default for SolverConfig {
    fn default() -> SolverConfig {
        SolverConfig { binary: None, timeout: Duration::from_secs(60) }
    }
}

impl SolverConfig {
    pub fn locate(&self) -> Result<PathBuf, WsksError> {
        if let Some(b) = &self.binary {
            return if b.is_file() { Ok(b.clone()) } else { Err(WsksError::SolverNotFound(b.display().to_string())) };
        }
        if let Some(b) = std::env::var_os("MONA_BIN") {
            let b = PathBuf::from(b);
            return if b.is_file() { Ok(b) } else { Err(WsksError::SolverNotFound(b.display().to_string())) };
        }
        std::env::var_os("PATH")
            .and_then(|paths| std::env::split_paths(&paths).map(|d| d.join("mona")).find(|p| p.is_file()))
            .ok_or_else(|| WsksError::SolverNotFound("mona is not on PATH and MONA_BIN is unset".into()))
    }
}

/// What the solver said about the formula.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverOutcome {
    Unsat,
    /// Satisfiable; `witness` is the solver's example, verbatim.
    Sat { witness: String },
}

/// Classifies the solver's standard output.
pub fn parse_outcome(stdout: &str) -> Result<SolverOutcome, WsksError> {
    if stdout.contains("Formula is unsatisfiable") {
        return Ok(SolverOutcome::Unsat);
    }
    if let Some(at) = stdout.find("A satisfying example") {
        return Ok(SolverOutcome::Sat { witness: stdout[at..].trim_end().to_string() });
    }
    if stdout.contains("Formula is valid") {
        return Ok(SolverOutcome::Sat { witness: String::new() });
    }
    let head: String = stdout.lines().take(5).collect::<Vec<_>>().join(" / ");
    Err(WsksError::ParseError(format!("unrecognized solver output: {head}")))
}

static RUNS: AtomicUsize = AtomicUsize::new(0);

fn scratch_file(text: &str) -> Result<PathBuf, WsksError> {
    let n = RUNS.fetch_add(1, Ordering::Relaxed);
    let path = std::env::temp_dir().join(format!("archtrap-{}-{n}.mona", std::process::id()));
    std::fs::write(&path, text).map_err(|e| WsksError::SolverFailed(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

fn run_binary(binary: &Path, input: &Path, timeout: Duration) -> Result<String, WsksError> {
    let mut child = Command::new(binary)
        .arg(input)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| WsksError::SolverNotFound(format!("{}: {e}", binary.display())))?;
    let mut stdout = child.stdout.take().expect("piped");
    let mut stderr = child.stderr.take().expect("piped");
    let out = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let err = std::thread::spawn(move || {
        let mut s = String::new();
        let _ = stderr.read_to_string(&mut s);
        s
    });
    let start = Instant::now();
    let status = loop {
        if let Some(status) = child.try_wait().map_err(|e| WsksError::SolverFailed(e.to_string()))? {
            break status;
        }
        if start.elapsed() > timeout {
            let _ = child.kill();
            let _ = child.wait();
            return Err(WsksError::Timeout(timeout.as_secs()));
        }
        std::thread::sleep(Duration::from_millis(10));
    };
    let stdout = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();
    if !status.success() && !stdout.contains("Formula is") {
        return Err(WsksError::SolverFailed(format!("{status}: {}", stderr.trim())));
    }
    Ok(stdout)
}

/// Writes `text` to a scratch file, runs the solver on it and classifies the
/// answer. Returns the outcome and the wall time of the solver run.
pub fn run_solver(text: &str, config: &SolverConfig) -> Result<(SolverOutcome, Duration), WsksError> {
    let binary = config.locate()?;
    let input = scratch_file(text)?;
    let start = Instant::now();
    let result = run_binary(&binary, &input, config.timeout);
    let _ = std::fs::remove_file(&input);
    let stdout = result?;
    Ok((parse_outcome(&stdout)?, start.elapsed()))
}
