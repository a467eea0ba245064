//! CSV tables with a provenance header line.

use std::fmt::Display;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// What every output file records about the run that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn header(&self) -> String {
        format!(
            "# radcell {} config_hash={} seed={} schema_version={}",
            env!("CARGO_PKG_VERSION"),
            self.config_hash,
            self.seed,
            SCHEMA_VERSION
        )
    }
}

/// An in-memory table written in one go, so a failed run leaves no partial file.
#[derive(Debug, Clone)]
pub struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Table { columns: columns.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        assert_eq!(row.len(), self.columns.len(), "row width differs from the header");
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn write(&self, dir: &Path, name: &str, prov: &Provenance) -> Result<PathBuf, CliError> {
        let path = dir.join(name);
        let io = |source| CliError::Write { path: path.clone(), source };
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        writeln!(w, "{}", prov.header()).map_err(io)?;
        writeln!(w, "{}", self.columns.join(",")).map_err(io)?;
        for r in &self.rows {
            writeln!(w, "{}", r.join(",")).map_err(io)?;
        }
        w.flush().map_err(io)?;
        Ok(path)
    }
}

/// Fixed-precision float cell.
pub fn f(v: f64, digits: usize) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.digits$}")
    }
}

pub fn s(v: impl Display) -> String {
    v.to_string()
}

/// Empty cell for a missing value.
pub fn opt<T: Display>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// One verdict of a command's built-in checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub scope: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, scope: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), scope: scope.into(), pass, detail: detail.into() }
    }
}

pub fn checks_table(checks: &[Check]) -> Table {
    let mut t = Table::new(&["check", "scope", "verdict", "detail"]);
    for c in checks {
        t.push(vec![
            c.name.clone(),
            c.scope.clone(),
            if c.pass { "PASS" } else { "FAIL" }.into(),
            c.detail.replace(',', ";"),
        ]);
    }
    t
}
