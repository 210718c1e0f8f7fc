//! Artifact writing: atomic temp-file-and-rename plus a run manifest beside
//! every artifact.

use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use crate::error::Result;

/// 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn csv_line(cells: &[String]) -> String {
    let mut s = cells.join(",");
    s.push('\n');
    s
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn manifest_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    artifact.with_file_name(name)
}

#[derive(Serialize)]
struct Manifest<'a, I: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    inputs: &'a I,
    artifacts: Vec<String>,
    started_unix_s: u64,
    wall_time_s: f64,
    threads: usize,
}

/// Collects artifacts for one command run and writes the manifest last.
pub struct Run<'a> {
    command: &'a str,
    started: Instant,
    started_unix: u64,
    artifacts: Vec<PathBuf>,
}

impl<'a> Run<'a> {
    pub fn start(command: &'a str) -> Self {
        Self {
            command,
            started: Instant::now(),
            started_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            artifacts: Vec::new(),
        }
    }

    /// Writes to `path`, or to stdout when `path` is `None`.
    pub fn emit(&mut self, path: Option<&Path>, bytes: &[u8]) -> Result<()> {
        match path {
            Some(p) => {
                write_atomic(p, bytes)?;
                self.artifacts.push(p.to_path_buf());
            }
            None => std::io::stdout().lock().write_all(bytes)?,
        }
        Ok(())
    }

    pub fn finish<I: Serialize>(self, inputs: &I) -> Result<()> {
        let Some(primary) = self.artifacts.first() else {
            return Ok(());
        };
        let m = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            inputs,
            artifacts: self.artifacts.iter().map(|p| p.display().to_string()).collect(),
            started_unix_s: self.started_unix,
            wall_time_s: self.started.elapsed().as_secs_f64(),
            threads: rayon::current_num_threads(),
        };
        let mut bytes = serde_json::to_vec_pretty(&m)?;
        bytes.push(b'\n');
        write_atomic(&manifest_path(primary), &bytes)
    }
}
