//! Artifact files: numeric CSVs, summary JSON and the run manifest.
//!
//! CSV floats use Rust's shortest round-trip formatting, so identical values
//! always produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;

/// A CSV cell: integers and floats are written without quoting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(u64),
    Float(f64),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

fn push_cell(out: &mut String, c: Cell) {
    match c {
        Cell::Int(v) => write!(out, "{v}"),
        Cell::Float(v) if v.is_nan() => write!(out, "NaN"),
        Cell::Float(v) if v.is_infinite() => write!(out, "{}", if v > 0.0 { "inf" } else { "-inf" }),
        Cell::Float(v) => write!(out, "{v}"),
    }
    .expect("writing to a String");
}

/// Renders a header and rows as CSV with LF line endings.
pub fn render_csv(header: &[&str], rows: &[Vec<Cell>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        for (i, c) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            push_cell(&mut out, *c);
        }
        out.push('\n');
    }
    out
}

/// `(x, value)` pairs on the grid `t_i = i / n`.
pub fn field_rows(values: &[f64]) -> Vec<Vec<Cell>> {
    let n = values.len() as f64;
    values
        .iter()
        .enumerate()
        .map(|(i, v)| vec![Cell::Float(i as f64 / n), Cell::Float(*v)])
        .collect()
}

pub fn indexed_rows(values: &[f64]) -> Vec<Vec<Cell>> {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| vec![Cell::from(i), Cell::Float(*v)])
        .collect()
}

/// Reads a two-column `index,value` CSV with a header line.
pub fn read_indexed_csv(path: &Path) -> Result<Vec<f64>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate().skip(1) {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.split(',');
        let (idx, val) = match (cols.next(), cols.next(), cols.next()) {
            (Some(i), Some(v), None) => (i.trim(), v.trim()),
            _ => return Err(format!("{}: line {}: expected `index,value`", path.display(), lineno + 1)),
        };
        let idx: usize = idx
            .parse()
            .map_err(|_| format!("{}: line {}: bad index `{idx}`", path.display(), lineno + 1))?;
        if idx != values.len() {
            return Err(format!("{}: line {}: expected index {}", path.display(), lineno + 1, values.len()));
        }
        let val: f64 = val
            .parse()
            .map_err(|_| format!("{}: line {}: bad value `{val}`", path.display(), lineno + 1))?;
        values.push(val);
    }
    Ok(values)
}

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
}

/// Output directory with a manifest that is written before any heavy work
/// and finalized when the run ends.
pub struct RunDir {
    dir: PathBuf,
    files: Vec<FileEntry>,
    started: Instant,
    header: Value,
}

impl RunDir {
    pub fn create(dir: &Path, command: &str, cfg: &ExperimentConfig, reference: bool) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        let started_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let header = json!({
            "command": command,
            "experiment": cfg.experiment.name(),
            "seed": cfg.seed,
            "reference_mode": reference,
            "threads": if reference { 1 } else { rayon::current_num_threads() },
            "versions": {
                "idprior": env!("CARGO_PKG_VERSION"),
                "idprior_core": idprior_core::VERSION,
            },
            "config": cfg,
            "started_unix": started_unix,
        });
        let run = Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            started: Instant::now(),
            header,
        };
        run.write_manifest("incomplete", None)?;
        Ok(run)
    }

    pub fn path(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    fn record(&mut self, name: &str, bytes: usize) {
        self.files.retain(|f| f.name != name);
        self.files.push(FileEntry {
            name: name.to_string(),
            bytes: bytes as u64,
        });
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> io::Result<()> {
        fs::write(self.dir.join(name), text)?;
        self.record(name, text.len());
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<Cell>]) -> io::Result<()> {
        self.write_text(name, &render_csv(header, rows))
    }

    pub fn write_json(&mut self, name: &str, value: &Value) -> io::Result<()> {
        let mut text = serde_json::to_string_pretty(value).expect("JSON value serializes");
        text.push('\n');
        self.write_text(name, &text)
    }

    fn write_manifest(&self, status: &str, error: Option<&str>) -> io::Result<()> {
        let mut m = self.header.clone();
        let obj = m.as_object_mut().expect("manifest header is an object");
        obj.insert("status".into(), json!(status));
        obj.insert("files".into(), json!(self.files));
        if status != "incomplete" {
            obj.insert("wall_time_s".into(), json!(self.started.elapsed().as_secs_f64()));
        }
        if let Some(e) = error {
            obj.insert("error".into(), json!(e));
        }
        let mut text = serde_json::to_string_pretty(&m).expect("manifest serializes");
        text.push('\n');
        fs::write(self.dir.join("manifest.json"), text)
    }

    pub fn finish(self, error: Option<&str>) -> io::Result<()> {
        let status = if error.is_some() { "failed" } else { "complete" };
        self.write_manifest(status, error)
    }
}
