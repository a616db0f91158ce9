//! Shared command plumbing: the usage/data error split, deterministic
//! image-level parallelism, and report writing.

use std::fmt;
use std::path::Path;

use segfix_core::io::write_atomic;

/// Command failures split by exit code: usage errors exit 1, data errors
/// exit 2.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) => f.write_str(m),
        }
    }
}

impl From<segfix_core::Error> for CliError {
    fn from(e: segfix_core::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub fn data(msg: impl Into<String>) -> CliError {
    CliError::Data(msg.into())
}

/// Maps `f` over `0..n`, optionally on a worker pool. Results come back in
/// index order either way, so downstream aggregation is byte-stable
/// regardless of the job count.
pub fn parallel_map<T, F>(jobs: usize, n: usize, f: F) -> CliResult<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    if jobs == 0 {
        return Err(usage("--jobs must be at least 1"));
    }
    if jobs == 1 || n <= 1 {
        return Ok((0..n).map(f).collect());
    }
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| data(format!("failed to start worker pool: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

/// Splits per-record outcomes into successes and failure messages, printing
/// each failure to stderr. The caller turns a nonempty failure list into
/// exit code 2 after finishing its report.
pub fn split_failures<T>(outcomes: Vec<Result<T, String>>) -> (Vec<T>, Vec<String>) {
    let mut oks = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for outcome in outcomes {
        match outcome {
            Ok(v) => oks.push(v),
            Err(msg) => {
                eprintln!("error: {msg}");
                failures.push(msg);
            }
        }
    }
    (oks, failures)
}

/// Writes a pretty-printed JSON report (atomically) when `--out` was given.
pub fn write_report(out: Option<&Path>, report: &serde_json::Value) -> CliResult<()> {
    if let Some(path) = out {
        let mut bytes = serde_json::to_vec_pretty(report)
            .map_err(|e| data(format!("failed to serialize report: {e}")))?;
        bytes.push(b'\n');
        write_atomic(path, &bytes)?;
        log::info!("report written to {}", path.display());
    }
    Ok(())
}

/// Exit-2 wrap-up shared by the manifest-driven commands.
pub fn finish_with_failures(command: &str, failures: Vec<String>) -> CliResult<()> {
    if failures.is_empty() {
        Ok(())
    } else {
        Err(data(format!(
            "{command}: {} record(s) failed",
            failures.len()
        )))
    }
}
