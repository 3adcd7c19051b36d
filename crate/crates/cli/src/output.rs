//! Output directory handling: CSV curves, JSON sidecars and the manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};
use sfflab::Curve;

use crate::args::Format;

/// Shortest decimal with 17 significant digits (round-trip exact).
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    format!("{v:.16e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub sha256: String,
    pub bytes: usize,
}

/// Collects written files and their checksums; the manifest goes last.
pub struct OutputDir {
    root: PathBuf,
    format: Format,
    files: Vec<FileEntry>,
    derived: Map<String, Value>,
}

impl OutputDir {
    pub fn create(root: &Path, format: Format) -> Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            format,
            files: Vec::new(),
            derived: Map::new(),
        })
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(name);
        atomic_write(&path, bytes)?;
        self.files.push(FileEntry {
            name: name.to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
            bytes: bytes.len(),
        });
        Ok(())
    }

    /// Table with a header row; every cell is already formatted. `name`
    /// carries a `.csv` extension, swapped for `.json` in JSON mode.
    pub fn write_rows(&mut self, name: &str, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
        match self.format {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(header)?;
                for r in rows {
                    w.write_record(&r)?;
                }
                let bytes = w.into_inner().context("flushing CSV buffer")?;
                self.write_bytes(name, &bytes)
            }
            Format::Json => {
                let cell = |c: &String| match c.parse::<f64>() {
                    Ok(v) if v.is_finite() => json!(v),
                    _ => Value::Null,
                };
                let rows: Vec<Vec<Value>> = rows.into_iter().map(|r| r.iter().map(cell).collect()).collect();
                let table = json!({ "columns": header, "rows": rows });
                let name = Path::new(name).with_extension("json");
                self.write_json(&name.to_string_lossy(), &table)
            }
        }
    }

    /// `t,<columns...>` table for curves sharing one grid.
    pub fn write_curves(&mut self, name: &str, columns: &[(&str, &Curve)]) -> Result<()> {
        let first = columns.first().context("no curves to write")?.1;
        let mut header = vec!["t".to_string()];
        header.extend(columns.iter().map(|(h, _)| h.to_string()));
        let times = first.times();
        let rows = times.iter().enumerate().map(|(i, &t)| {
            let mut row = vec![fmt_f64(t)];
            row.extend(columns.iter().map(|(_, c)| fmt_f64(c.values[i])));
            row
        });
        self.write_rows(name, &header, rows)
    }

    pub fn write_curve(&mut self, name: &str, column: &str, curve: &Curve) -> Result<()> {
        self.write_curves(name, &[(column, curve)])
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    /// Record a derived quantity for the manifest.
    pub fn derive(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.derived.insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    /// Write `manifest.json` atomically after every data file.
    pub fn finish(self, command: &str, config: Value) -> Result<PathBuf> {
        let manifest = json!({
            "tool": "sfflab",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config": config,
            "files": self.files,
            "derived": self.derived,
        });
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        let path = self.root.join("manifest.json");
        atomic_write(&path, &bytes)?;
        Ok(path)
    }
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("partial");
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}
