//! CSV and JSON artifacts.
//!
//! All floats in CSV files are written with 17 significant digits so every
//! value round-trips exactly; files use `,` separators and LF line endings.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use bwl::sim::fmt_f64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => fmt_f64(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write(&self, path: &Path) -> anyhow::Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_path(path)
            .with_context(|| format!("creating {}", path.display()))?;
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A CSV file read back as named string columns.
#[derive(Debug, Clone)]
pub struct LoadedTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl LoadedTable {
    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let mut r = csv::Reader::from_path(path)
            .with_context(|| format!("opening {}", path.display()))?;
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
            .collect::<Result<_, _>>()
            .with_context(|| format!("reading {}", path.display()))?;
        Ok(Self { header, rows })
    }

    pub fn column_index(&self, name: &str) -> anyhow::Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("missing column `{name}`"))
    }

    pub fn numeric(&self, name: &str) -> anyhow::Result<Vec<f64>> {
        let idx = self.column_index(name)?;
        self.rows
            .iter()
            .map(|r| {
                r[idx]
                    .parse::<f64>()
                    .with_context(|| format!("column `{name}` holds `{}`", r[idx]))
            })
            .collect()
    }

    pub fn text(&self, name: &str) -> anyhow::Result<Vec<String>> {
        let idx = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[idx].clone()).collect())
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

/// Common shape of `report.json`; command-specific details live in `details`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report<C, D> {
    pub command: String,
    pub config: C,
    pub metrics: BTreeMap<String, bwl::Metrics>,
    /// Per-sample tables, relative to the report's directory.
    pub tables: BTreeMap<String, PathBuf>,
    pub details: D,
    pub wall_clock_seconds: f64,
}

/// The reference numbers a run is compared against.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReferenceValue {
    pub rmse: f64,
    pub mean_latent_variance: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = Table::new(["time", "region", "value"]);
        t.push(vec![0.1.into(), "train".into(), (1.0 / 3.0).into()]);
        t.push(vec![0.2.into(), "test".into(), (-2e-300).into()]);
        t.write(&path).unwrap();
        let raw = fs::read_to_string(&path).unwrap();
        assert!(!raw.contains('\r'));
        let back = LoadedTable::read(&path).unwrap();
        assert_eq!(back.numeric("value").unwrap(), vec![1.0 / 3.0, -2e-300]);
        assert_eq!(back.text("region").unwrap(), vec!["train", "test"]);
        assert!(back.numeric("missing").is_err());
    }
}
