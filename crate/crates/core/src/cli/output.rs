use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

use super::CliError;

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Fixed 17-significant-digit rendering, so that reruns diff cleanly.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Real(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Real(v) => format_f64(*v),
            Cell::Text(s) => s.clone(),
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Cell::Int(v) => (*v).into(),
            Cell::Real(v) => (*v).into(),
            Cell::Text(s) => s.clone().into(),
        }
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// Column-oriented plot data.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn to_json(&self) -> Vec<u8> {
        let rows: Vec<Vec<serde_json::Value>> =
            self.rows.iter().map(|r| r.iter().map(Cell::to_json).collect()).collect();
        let doc = serde_json::json!({ "columns": self.columns, "rows": rows });
        let mut out = serde_json::to_vec_pretty(&doc).expect("json");
        out.push(b'\n');
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub master_seed: u64,
    pub version: String,
    pub artifacts: BTreeSet<String>,
}

/// An output directory bound to one config hash.
#[derive(Debug)]
pub struct OutputDir {
    dir: PathBuf,
    format: Format,
    manifest: Manifest,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl OutputDir {
    /// Refuses a directory whose manifest belongs to a different config.
    pub fn open(dir: &Path, config_hash: &str, master_seed: u64, format: Format) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let path = dir.join(MANIFEST);
        let mut manifest = Manifest {
            config_hash: config_hash.to_string(),
            master_seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            artifacts: BTreeSet::new(),
        };
        if path.exists() {
            let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
            let existing: Manifest =
                serde_json::from_str(&text).map_err(|e| io_err(&path, format!("unreadable manifest: {e}")))?;
            if existing.config_hash != config_hash {
                return Err(CliError::ManifestMismatch(format!(
                    "{} holds results for config {}, not {config_hash}",
                    dir.display(),
                    existing.config_hash
                )));
            }
            manifest.artifacts = existing.artifacts;
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
            manifest,
        })
    }

    fn short_hash(&self) -> &str {
        &self.manifest.config_hash[..12]
    }

    pub fn file_name(&self, stem: &str, ext: &str) -> String {
        format!("{stem}-{}.{ext}", self.short_hash())
    }

    fn write_bytes(&mut self, name: String, bytes: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.dir.join(&name);
        write_atomic(&path, bytes)?;
        self.manifest.artifacts.insert(name);
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, stem: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("serializable output");
        bytes.push(b'\n');
        let name = self.file_name(stem, "json");
        self.write_bytes(name, &bytes)
    }

    pub fn write_table(&mut self, stem: &str, table: &Table) -> Result<PathBuf, CliError> {
        let (bytes, ext) = match self.format {
            Format::Csv => (table.to_csv(), "csv"),
            Format::Json => (table.to_json(), "json"),
        };
        let name = self.file_name(stem, ext);
        self.write_bytes(name, &bytes)
    }

    pub fn finish(self) -> Result<Manifest, CliError> {
        let mut bytes = serde_json::to_vec_pretty(&self.manifest).expect("manifest");
        bytes.push(b'\n');
        write_atomic(&self.dir.join(MANIFEST), &bytes)?;
        Ok(self.manifest)
    }
}

/// Write to a temporary file in the target directory, then rename over the
/// destination.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| io_err(dir, e))?;
    tmp.write_all(bytes).map_err(|e| io_err(path, e))?;
    tmp.as_file().sync_all().map_err(|e| io_err(path, e))?;
    tmp.persist(path).map_err(|e| io_err(path, e.error))?;
    Ok(())
}
