//! Flat CSV tables, JSON sidecars and the run manifest. Every file of a run
//! is written through one [`ManifestBuilder`], which records its hash.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use super::ExperimentError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const MANIFEST_FORMAT: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    /// Empty for dimensionless quantities.
    pub unit: String,
}

impl Column {
    pub fn new(name: impl Into<String>, unit: impl Into<String>) -> Self {
        Self { name: name.into(), unit: unit.into() }
    }

    pub fn header(&self) -> String {
        if self.unit.is_empty() {
            self.name.clone()
        } else {
            format!("{}[{}]", self.name, self.unit)
        }
    }
}

/// Rectangular numeric table. Integers (indices) are stored as f64 and
/// print without a fractional part.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: Vec<Column>) -> Self {
        Self { columns, rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width does not match the header");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, ExperimentError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| ExperimentError::Io { path: "<csv>".into(), message: e.to_string() };
        w.write_record(self.columns.iter().map(Column::header)).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|&v| format_value(v))).map_err(io)?;
        }
        w.into_inner().map_err(|e| ExperimentError::Io { path: "<csv>".into(), message: e.to_string() })
    }
}

/// Shortest round-trip form; integral values print without a decimal point.
pub fn format_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        format!("{v:?}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the run directory, `/`-separated.
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: String,
    pub params: serde_json::Value,
    pub seed: u64,
    pub files: Vec<FileEntry>,
    pub versions: BTreeMap<String, String>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| ExperimentError::InvalidConfig(format!("{}: {e}", path.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn versions() -> BTreeMap<String, String> {
    BTreeMap::from([
        ("qsync".to_string(), env!("CARGO_PKG_VERSION").to_string()),
        ("manifest".to_string(), MANIFEST_FORMAT.to_string()),
    ])
}

/// Single writer for a run directory.
#[derive(Debug)]
pub struct ManifestBuilder {
    root: PathBuf,
    files: Vec<FileEntry>,
}

impl ManifestBuilder {
    pub fn create(root: &Path) -> Result<Self, ExperimentError> {
        fs::create_dir_all(root).map_err(|e| ExperimentError::io(root, e))?;
        Ok(Self { root: root.to_path_buf(), files: Vec::new() })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<(), ExperimentError> {
        if rel == MANIFEST_FILE || self.files.iter().any(|f| f.path == rel) {
            return Err(ExperimentError::Io { path: rel.into(), message: "file written twice in one run".into() });
        }
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| ExperimentError::io(dir, e))?;
        }
        fs::write(&path, bytes).map_err(|e| ExperimentError::io(&path, e))?;
        self.files.push(FileEntry { path: rel.to_string(), sha256: sha256_hex(bytes) });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<(), ExperimentError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| ExperimentError::Io {
            path: rel.into(),
            message: e.to_string(),
        })?;
        bytes.push(b'\n');
        self.write_bytes(rel, &bytes)
    }

    /// `<stem>.csv` plus a `<stem>.json` sidecar with the column units and
    /// `metadata`.
    pub fn write_table(&mut self, stem: &str, table: &Table, metadata: serde_json::Value) -> Result<(), ExperimentError> {
        let csv_name = format!("{stem}.csv");
        self.write_bytes(&csv_name, &table.to_csv()?)?;
        let sidecar = json!({
            "file": csv_name,
            "columns": table.columns,
            "rows": table.rows.len(),
            "metadata": metadata,
        });
        self.write_json(&format!("{stem}.json"), &sidecar)
    }

    /// Writes `manifest.json` listing every file written so far.
    pub fn finish(self, scenario: &str, params: serde_json::Value, seed: u64) -> Result<Manifest, ExperimentError> {
        let manifest = Manifest {
            scenario: scenario.to_string(),
            params,
            seed,
            files: self.files,
            versions: versions(),
        };
        let path = self.root.join(MANIFEST_FILE);
        let mut bytes = serde_json::to_vec_pretty(&manifest).map_err(|e| ExperimentError::Io {
            path: MANIFEST_FILE.into(),
            message: e.to_string(),
        })?;
        bytes.push(b'\n');
        fs::write(&path, bytes).map_err(|e| ExperimentError::io(&path, e))?;
        Ok(manifest)
    }
}

/// Recomputes every listed hash; returns the paths that differ or are missing.
pub fn verify_manifest(root: &Path, manifest: &Manifest) -> Vec<String> {
    manifest
        .files
        .iter()
        .filter(|f| match fs::read(root.join(&f.path)) {
            Ok(bytes) => sha256_hex(&bytes) != f.sha256,
            Err(_) => true,
        })
        .map(|f| f.path.clone())
        .collect()
}
