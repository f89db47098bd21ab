use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::config::RunConfig;
use super::manifest::RunManifest;
use crate::error::{Error, Result};

/// Environment variable naming the root of all run directories.
pub const OUT_ENV: &str = "TORUS_NLS_OUT";
pub const DEFAULT_OUT: &str = "torus-nls-out";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    /// Floats use 17 significant digits, enough to round-trip any double.
    pub fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(x) if x.is_nan() => "NaN".into(),
            Cell::Float(x) if x.is_infinite() => if *x > 0.0 { "inf" } else { "-inf" }.into(),
            Cell::Float(x) => format!("{x:.16e}"),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Float(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

impl From<u32> for Cell {
    fn from(i: u32) -> Self {
        Cell::Int(i64::from(i))
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Empty, Cell::Float)
    }
}

/// One CSV file: a fixed header and rows of the same width.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(&self.header).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(std::io::Error::other(e)))
    }
}

/// Output root: `$TORUS_NLS_OUT`, or `torus-nls-out` in the working directory.
pub fn output_root() -> PathBuf {
    std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT), PathBuf::from)
}

/// Hex digest of the resolved config; equal configs share a directory.
pub fn config_hash(config: &RunConfig) -> Result<String> {
    let text = serde_json::to_string(config)?;
    let digest = Sha256::digest(text.as_bytes());
    Ok(digest.iter().take(8).map(|b| format!("{b:02x}")).collect())
}

pub fn run_dir(root: &Path, config: &RunConfig) -> Result<PathBuf> {
    Ok(root.join(format!("{}-{}", config.subcommand, config_hash(config)?)))
}

/// Writes every table and then the manifest into `dir`. The manifest's
/// `outputs` is set to the table file names.
pub fn emit(dir: &Path, tables: &[Table], manifest: &mut RunManifest) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| with_path(e, dir))?;
    let mut written = Vec::new();
    manifest.outputs = tables.iter().map(Table::file_name).collect();
    for table in tables {
        let path = dir.join(table.file_name());
        fs::write(&path, table.to_csv()?).map_err(|e| with_path(e, &path))?;
        written.push(path);
    }
    let path = dir.join(MANIFEST_FILE);
    fs::write(&path, manifest.to_json()?).map_err(|e| with_path(e, &path))?;
    written.push(path);
    Ok(written)
}

fn with_path(e: std::io::Error, path: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, f64::MAX] {
            let text = Cell::Float(x).render();
            assert_eq!(text.parse::<f64>().unwrap(), x, "{text}");
        }
        assert_eq!(Cell::Float(1.0).render(), "1.0000000000000000e0");
        assert_eq!(Cell::Float(f64::NAN).render(), "NaN");
        assert_eq!(Cell::Empty.render(), "");
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new("sweep", &["k", "gap", "mu_meas"]);
        t.push(vec![64u32.into(), 0.5.into(), None.into()]);
        assert_eq!(t.to_csv().unwrap(), "k,gap,mu_meas\n64,5.0000000000000000e-1,\n");
    }

    #[test]
    fn unwritable_path() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        fs::write(&blocker, "x").unwrap();
        let config = super::super::config::parse_config(
            super::super::config::Subcommand::Oracle,
            &Default::default(),
        )
        .unwrap();
        let mut m = RunManifest {
            version: String::new(),
            subcommand: config.subcommand,
            config,
            derived: Default::default(),
            tolerances: Default::default(),
            audits: Default::default(),
            results: Default::default(),
            warnings: Vec::new(),
            outputs: Vec::new(),
            wall_time_s: 0.0,
        };
        let err = emit(&blocker.join("sub"), &[], &mut m).unwrap_err();
        assert!(matches!(err, Error::Io(_)));
    }
}
