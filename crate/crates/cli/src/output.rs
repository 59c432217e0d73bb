//! Run directory: atomic writes, a deterministic manifest and a separate
//! timing file.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

#[derive(Serialize)]
struct FileEntry {
    name: String,
    sha256: String,
    bytes: usize,
}

#[derive(Serialize)]
struct TaskEntry {
    name: String,
    status: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_sha256: &'a str,
    seed: u64,
    tolerance: f64,
    status: &'a str,
    tasks: &'a [TaskEntry],
    files: &'a [FileEntry],
}

#[derive(Serialize)]
struct Timing<'a> {
    started_unix: f64,
    elapsed_seconds: f64,
    workers: usize,
    tasks: &'a [(String, f64)],
}

pub struct RunDir {
    dir: PathBuf,
    command: String,
    config_sha256: String,
    seed: u64,
    tolerance: f64,
    files: Vec<FileEntry>,
    tasks: Vec<TaskEntry>,
    timings: Vec<(String, f64)>,
    started: Instant,
    started_unix: f64,
}

impl RunDir {
    /// Creates `dir` and stores a copy of the raw config as `config.json`.
    pub fn create(dir: &Path, command: &str, config_text: &str, seed: u64, tolerance: f64) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0);
        let mut run = Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            config_sha256: sha256_hex(config_text.as_bytes()),
            seed,
            tolerance,
            files: Vec::new(),
            tasks: Vec::new(),
            timings: Vec::new(),
            started: Instant::now(),
            started_unix,
        };
        run.write_bytes("config.json", config_text.as_bytes())?;
        Ok(run)
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.dir.join(name), bytes)?;
        self.files.push(FileEntry { name: name.to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.into()))?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(|e| CliError::Io(e.into()))?;
        for r in rows {
            w.write_record(r).map_err(|e| CliError::Io(e.into()))?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
        self.write_bytes(name, &bytes)
    }

    pub fn task(&mut self, name: &str, ok: bool, seconds: f64) {
        self.tasks.push(TaskEntry { name: name.to_string(), status: if ok { "pass" } else { "fail" }.to_string() });
        self.timings.push((name.to_string(), seconds));
    }

    /// Writes `manifest.json` and `timing.json`. The manifest holds no
    /// timestamps so reruns produce identical bytes.
    pub fn finish(mut self, status: &str, workers: usize) -> Result<(), CliError> {
        let manifest = Manifest {
            tool: "superhedge",
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            config_sha256: &self.config_sha256,
            seed: self.seed,
            tolerance: self.tolerance,
            status,
            tasks: &self.tasks,
            files: &self.files,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Io(e.into()))?;
        bytes.push(b'\n');
        write_atomic(&self.dir.join("manifest.json"), &bytes)?;
        let timing = Timing {
            started_unix: self.started_unix,
            elapsed_seconds: self.started.elapsed().as_secs_f64(),
            workers,
            tasks: &self.timings,
        };
        let bytes = serde_json::to_vec_pretty(&timing).map_err(|e| CliError::Io(e.into()))?;
        self.files.clear();
        write_atomic(&self.dir.join("timing.json"), &bytes)?;
        Ok(())
    }
}

/// Formats a float for CSV; empty for `None`.
pub fn num(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Histogram {
    pub quantity: String,
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<usize>,
    /// Values that were not finite and so not binned.
    pub skipped: usize,
}

impl Histogram {
    pub fn new(quantity: &str, values: &[f64], bins: usize) -> Self {
        let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
        let bins = bins.max(1);
        let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut counts = vec![0; bins];
        if !finite.is_empty() {
            let width = hi - lo;
            for v in &finite {
                let b = if width > 0.0 { (((v - lo) / width) * bins as f64) as usize } else { 0 };
                counts[b.min(bins - 1)] += 1;
            }
        }
        let (lo, hi) = if finite.is_empty() { (0.0, 0.0) } else { (lo, hi) };
        Self { quantity: quantity.to_string(), lo, hi, counts, skipped: values.len() - finite.len() }
    }

    pub fn rows(&self, group: &str) -> Vec<Vec<String>> {
        let n = self.counts.len() as f64;
        let w = (self.hi - self.lo) / n;
        self.counts
            .iter()
            .enumerate()
            .map(|(i, c)| {
                vec![
                    group.to_string(),
                    self.quantity.clone(),
                    (self.lo + w * i as f64).to_string(),
                    (self.lo + w * (i + 1) as f64).to_string(),
                    c.to_string(),
                ]
            })
            .collect()
    }
}

pub const HISTOGRAM_HEADER: [&str; 5] = ["group", "quantity", "bin_lo", "bin_hi", "count"];
