//! Run directories and delimited numeric output.
//!
//! A run lives in `<out>/<command>-<hash>-s<seed>`, where the hash covers
//! the command name and the resolved configuration. The directory holds
//! `config.toml`, a `SCHEMA` file listing every table and its columns, the
//! tables themselves, and a `COMPLETE` marker written only on success.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::{to_toml, RunConfig};
use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;
pub const COMPLETE_MARKER: &str = "COMPLETE";

/// `f64` with 17 significant digits, enough to round-trip exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// One CSV cell.
pub enum Cell {
    F(f64),
    I(i64),
    U(usize),
    S(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::I(i) => i.to_string(),
            Cell::U(u) => u.to_string(),
            Cell::S(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::F(x)
    }
}

impl From<usize> for Cell {
    fn from(u: usize) -> Self {
        Cell::U(u)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::S(s.into())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::S(s)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::S(b.to_string())
    }
}

pub struct Table {
    writer: csv::Writer<fs::File>,
    width: usize,
}

impl Table {
    pub fn row(&mut self, cells: Vec<Cell>) -> Result<()> {
        debug_assert_eq!(cells.len(), self.width);
        self.writer.write_record(cells.iter().map(Cell::render))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.writer.flush()?;
        Ok(())
    }
}

pub struct RunDir {
    path: PathBuf,
    schema: Vec<(String, String)>,
}

/// First 12 hex digits of SHA-256 over the command name and config text.
pub fn config_hash(name: &str, config_toml: &str) -> String {
    let digest = Sha256::digest(format!("{name}\n{config_toml}").as_bytes());
    digest.iter().take(6).fold(String::new(), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

impl RunDir {
    /// Creates (or reuses) the run directory for `cfg` under `out` and writes
    /// the resolved configuration. A stale completion marker is removed.
    pub fn create<C: RunConfig>(out: &Path, cfg: &C) -> Result<Self> {
        let text = to_toml(cfg)?;
        let path = out.join(format!("{}-{}-s{}", C::NAME, config_hash(C::NAME, &text), cfg.seed()));
        fs::create_dir_all(&path)?;
        let marker = path.join(COMPLETE_MARKER);
        if marker.exists() {
            fs::remove_file(marker)?;
        }
        fs::write(path.join("config.toml"), text)?;
        Ok(Self { path, schema: Vec::new() })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn file(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    /// Opens a CSV table and records its columns in the schema.
    pub fn table(&mut self, name: &str, columns: &[&str]) -> Result<Table> {
        let mut writer = csv::Writer::from_path(self.path.join(name))?;
        writer.write_record(columns)?;
        self.schema.push((name.into(), columns.join(",")));
        Ok(Table { writer, width: columns.len() })
    }

    /// Records a non-tabular file in the schema.
    pub fn describe(&mut self, name: &str, description: &str) {
        self.schema.push((name.into(), description.into()));
    }

    fn write_schema(&self) -> Result<()> {
        let mut text = format!("schema_version {SCHEMA_VERSION}\n");
        for (name, cols) in &self.schema {
            let _ = writeln!(text, "{name}: {cols}");
        }
        fs::write(self.path.join("SCHEMA"), text)?;
        Ok(())
    }

    /// Writes the schema and the completion marker.
    pub fn complete(&self) -> Result<()> {
        self.write_schema()?;
        fs::write(self.path.join(COMPLETE_MARKER), "")?;
        Ok(())
    }

    /// Writes the schema without the completion marker.
    pub fn abandon(&self) -> Result<()> {
        self.write_schema()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02e23, std::f64::consts::PI] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn hash_depends_on_name_and_text() {
        assert_eq!(config_hash("a", "x = 1\n").len(), 12);
        assert_ne!(config_hash("a", "x = 1\n"), config_hash("b", "x = 1\n"));
        assert_eq!(config_hash("a", "x = 1\n"), config_hash("a", "x = 1\n"));
    }
}
