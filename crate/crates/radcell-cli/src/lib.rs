//! Configuration, output tables and subcommands behind the `radcell` binary.

use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod commands;
pub mod config;
pub mod output;

pub use commands::Outcome;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    ReadConfig { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Sim(#[from] radcell::Error),
}

/// Independent sub-seed for work item `idx` (splitmix64 finaliser).
pub fn derive_seed(seed: u64, idx: u64) -> u64 {
    let mut z = seed ^ idx.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Writes every table plus `checks.csv` into `dir`.
    pub fn write(&self, dir: &Path, prov: &output::Provenance) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.to_path_buf(), source })?;
        let mut paths = Vec::with_capacity(self.tables.len() + 1);
        for (name, t) in &self.tables {
            paths.push(t.write(dir, name, prov)?);
        }
        paths.push(output::checks_table(&self.checks).write(dir, "checks.csv", prov)?);
        Ok(paths)
    }
}
