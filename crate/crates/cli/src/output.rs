use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::json;

pub const OUT_DIR_ENV: &str = "QCOND_OUT_DIR";

#[derive(Debug)]
pub enum CliError {
    Core(qcond::Error),
    Usage(String),
    Io(String),
    /// Output was written, but at least one bound check failed.
    Violations(String),
}

impl From<qcond::Error> for CliError {
    fn from(e: qcond::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn code(&self) -> &str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Usage(_) => "cli.usage",
            CliError::Io(_) => "cli.io",
            CliError::Violations(_) => "verify.bound_violation",
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Usage(m) | CliError::Io(m) | CliError::Violations(m) => m.clone(),
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Violations(_) => 3,
            _ => 1,
        }
    }

    pub fn report(&self) -> ExitCode {
        let body = json!({ "error": { "code": self.code(), "message": self.message() } });
        eprintln!("{body}");
        ExitCode::from(self.exit_code())
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Where a command writes its main artifact.
pub fn output_path(command: &str, ext: &str, out: Option<&Path>) -> PathBuf {
    match out {
        Some(p) => p.to_path_buf(),
        None => std::env::var_os(OUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("."))
            .join(format!("{command}.{ext}")),
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    output.with_extension("manifest.json")
}

fn ensure_parent(path: &Path) -> CliResult<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
        }
        _ => Ok(()),
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T], header: &str) -> CliResult<()> {
    ensure_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    if rows.is_empty() {
        w.write_record(header.split(','))
            .map_err(|e| io_err(path, e))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Writes the manifest and prints where both files went.
pub fn finish<C: Serialize>(command: &str, output: &Path, config: &C, k_b: f64) -> CliResult<()> {
    let manifest = manifest_path(output);
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let body = json!({
        "command": command,
        "argv": std::env::args().collect::<Vec<_>>(),
        "config": config,
        "units": {
            "energy": "J",
            "temperature": "J / k_B",
            "imaginary_time": "1 / J",
            "k_B": k_b,
        },
        "output": output,
        "version": env!("CARGO_PKG_VERSION"),
        "timestamp_unix": timestamp,
    });
    write_json(&manifest, &body)?;
    println!("{}", json!({ "output": output, "manifest": manifest }));
    Ok(())
}
