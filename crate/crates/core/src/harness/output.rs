//! Full-precision CSV tables with a commented provenance header.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{KppError, Result};

/// One cell: numbers are written with 17 significant digits.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

pub fn format_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn render(c: &Cell) -> String {
    match c {
        Cell::Num(v) => format_num(*v),
        Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
        Cell::Text(s) => s.clone(),
    }
}

/// A named table destined for `<dir>/<name>.csv`.
#[derive(Debug, Clone)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Header lines start with `#`: config hash, then the column list.
    pub fn write(&self, dir: &Path, config_hash: &str) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let path = dir.join(format!("{}.csv", self.name));
        let mut f = BufWriter::new(fs::File::create(&path)?);
        writeln!(f, "# config_hash: {config_hash}")?;
        writeln!(f, "# columns: {}", self.columns.join(", "))?;
        writeln!(f, "{}", self.columns.join(","))?;
        for r in &self.rows {
            let line: Vec<String> = r.iter().map(render).collect();
            writeln!(f, "{}", line.join(","))?;
        }
        f.flush()?;
        Ok(path)
    }
}

/// Read the hash recorded in a table written by [`Table::write`].
pub fn read_config_hash(path: &Path) -> Result<String> {
    let text = fs::read_to_string(path)?;
    text.lines()
        .next()
        .and_then(|l| l.strip_prefix("# config_hash: "))
        .map(str::to_string)
        .ok_or_else(|| KppError::Archive(format!("{}: no config hash header", path.display())))
}
