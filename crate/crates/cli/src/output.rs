use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use collapse_core::table::{format_float, Cell, Table};
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::config::Format;
use crate::report::{CliError, CliResult};

pub const ARTIFACT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Collects the files of one run before they are written.
pub struct Output {
    experiment: &'static str,
    format: Format,
    files: Vec<(String, Vec<u8>)>,
}

impl Output {
    pub fn new(experiment: &'static str, format: Format) -> Self {
        Self { experiment, format, files: Vec::new() }
    }

    fn add(&mut self, suffix: &str, bytes: Vec<u8>) {
        self.files.push((format!("{}_{suffix}", self.experiment), bytes));
    }

    /// Adds `<experiment>_<name>.csv` when CSV output is requested.
    pub fn table(&mut self, name: &str, table: &Table) {
        if self.format.csv() {
            self.add(&format!("{name}.csv"), table.to_csv_string().into_bytes());
        }
    }

    /// Adds the run summary: JSON as is, CSV as one row per scalar entry.
    pub fn summary<S: Serialize>(&mut self, summary: &S) {
        let value = serde_json::to_value(summary).expect("summary serializes");
        if self.format.json() {
            let mut text = serde_json::to_string_pretty(&value).expect("summary serializes");
            text.push('\n');
            self.add("summary.json", text.into_bytes());
        }
        if self.format.csv() {
            let mut t = Table::new(["quantity[label]", "value[as labelled]"]);
            if let Value::Object(map) = &value {
                flatten("", map, &mut t);
            }
            self.add("summary.csv", t.to_csv_string().into_bytes());
        }
    }
}

fn flatten(prefix: &str, map: &Map<String, Value>, t: &mut Table) {
    for (k, v) in map {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        let cell = match v {
            Value::Number(n) if n.is_f64() => format_float(n.as_f64().unwrap_or(f64::NAN)),
            Value::Number(n) => n.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::String(s) => s.clone(),
            Value::Null => "nan".into(),
            Value::Object(inner) => {
                flatten(&key, inner, t);
                continue;
            }
            Value::Array(_) => continue,
        };
        t.push(vec![Cell::Text(key), Cell::Text(cell)]);
    }
}

#[derive(Debug, Serialize)]
pub struct FileRecord {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub artifact_version: String,
    pub seed: u64,
    pub format: Format,
    pub config: Value,
    pub started_unix_seconds: f64,
    pub wall_clock_seconds: f64,
    pub files: Vec<FileRecord>,
}

pub struct RunContext {
    pub experiment: &'static str,
    pub seed: u64,
    pub format: Format,
    pub out_dir: PathBuf,
    pub config: Value,
    started: SystemTime,
    clock: Instant,
}

impl RunContext {
    pub fn new(experiment: &'static str, seed: u64, format: Format, out_dir: PathBuf, config: Value) -> Self {
        Self { experiment, seed, format, out_dir, config, started: SystemTime::now(), clock: Instant::now() }
    }

    /// Writes every collected file plus the manifest; returns the manifest.
    pub fn finish(self, output: Output) -> CliResult<RunManifest> {
        std::fs::create_dir_all(&self.out_dir).map_err(|e| CliError::io(self.out_dir.display().to_string(), &e))?;
        let mut files = Vec::with_capacity(output.files.len());
        for (name, bytes) in &output.files {
            write(&self.out_dir.join(name), bytes)?;
            files.push(FileRecord { name: name.clone(), bytes: bytes.len() as u64, sha256: hex::encode(Sha256::digest(bytes)) });
        }
        let manifest = RunManifest {
            experiment: self.experiment.to_string(),
            artifact_version: ARTIFACT_VERSION.to_string(),
            seed: self.seed,
            format: self.format,
            config: self.config,
            started_unix_seconds: self.started.duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0),
            wall_clock_seconds: self.clock.elapsed().as_secs_f64(),
            files,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        write(&self.out_dir.join(format!("{}_manifest.json", self.experiment)), text.as_bytes())?;
        Ok(manifest)
    }
}

fn write(path: &Path, bytes: &[u8]) -> CliResult<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path.display().to_string(), &e))
}
