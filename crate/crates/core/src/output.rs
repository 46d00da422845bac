//! Deterministic CSV and JSON artifacts stamped with the resolved config.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::SimulationConfig;
use crate::error::Result;

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Real(f64),
    Int(i64),
    Flag(bool),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Real(x) => fmt_f64(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Flag(b) => u8::from(*b).to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Flag(x)
    }
}

/// A time series with a fixed column order.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width must match the header");
        self.rows.push(row);
    }

    /// Header row plus data rows.
    pub fn body(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::render).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match r[j] {
                    Cell::Real(x) => x,
                    Cell::Int(i) => i as f64,
                    Cell::Flag(b) => f64::from(u8::from(b)),
                })
                .collect(),
        )
    }
}

/// Writes the artifacts of one run; every file carries the same config hash.
#[derive(Clone, Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    hash: String,
    config_json: String,
    csv: bool,
    json: bool,
}

impl ArtifactWriter {
    pub fn new(cfg: &SimulationConfig, dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            hash: cfg.hash(),
            config_json: cfg.resolved_json(),
            csv: cfg.output.formats.iter().any(|f| f == "csv"),
            json: cfg.output.formats.iter().any(|f| f == "json"),
        })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// `# config_hash` and `# config` comment lines, then the table.
    pub fn csv_text(&self, table: &Table) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# config_hash: {}", self.hash);
        let _ = writeln!(out, "# config: {}", self.config_json);
        out.push_str(&table.body());
        out
    }

    pub fn write_csv(&self, name: &str, table: &Table) -> Result<Option<PathBuf>> {
        if !self.csv {
            return Ok(None);
        }
        let path = self.dir.join(format!("{name}.csv"));
        fs::write(&path, self.csv_text(table))?;
        Ok(Some(path))
    }

    /// `{"config_hash", "config", "report"}` pretty-printed.
    pub fn json_text<T: Serialize>(&self, report: &T) -> Result<String> {
        let config: serde_json::Value = serde_json::from_str(&self.config_json)?;
        let doc = serde_json::json!({
            "config_hash": self.hash,
            "config": config,
            "report": serde_json::to_value(report)?,
        });
        Ok(serde_json::to_string_pretty(&doc)? + "\n")
    }

    pub fn write_json<T: Serialize>(&self, name: &str, report: &T) -> Result<Option<PathBuf>> {
        if !self.json {
            return Ok(None);
        }
        let path = self.dir.join(format!("{name}.json"));
        fs::write(&path, self.json_text(report)?)?;
        Ok(Some(path))
    }
}

/// Splits a CSV artifact into its hash line and body (header row onward).
pub fn split_csv(text: &str) -> (Option<&str>, String) {
    let hash = text
        .lines()
        .next()
        .and_then(|l| l.strip_prefix("# config_hash: "));
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    (hash, body.join("\n"))
}
